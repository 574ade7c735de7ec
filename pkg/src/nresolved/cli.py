"""Config-driven batch runner.

A run is described by an INI file (schema in ``docs/formats.md``)::

    [run]
    task = steady
    model = ddab_cb
    output = ddab.csv

    [params]
    gamma_l = 1
    delta = 1

    [sweep.phi]
    start = 0
    stop = 2*pi
    points = 101

Every sweep point becomes one CSV row; a ``<output>.meta.json`` sidecar
records the resolved parameters, tolerances and library versions. Outputs
contain no timestamps, so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import ast
import concurrent.futures
import configparser
import csv
import dataclasses
import io
import itertools
import json
import math
import operator
import os
import re
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy

from . import __version__, counting, liouville, models, observables, oracles, scba
from .errors import NresolvedError, SchemaError

THREADS_ENV = "NRESOLVED_THREADS"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_FLAGGED = 0, 1, 2, 3

TASKS = ("steady", "noise", "charge-noise", "circuit-noise", "fcs", "ld", "scba-spectral", "scba-iv", "oracle")
SCBA_TASKS = ("scba-spectral", "scba-iv")

# task options with their defaults; None means "derived at run time"
TASK_OPTIONS: dict[str, dict[str, Any]] = {
    "steady": {},
    "noise": {"freq": 0.0},
    "charge-noise": {"freq": 1.0},
    "circuit-noise": {
        "freq": 1.0,
        "alpha": 0.5,
        "freq_start": None,
        "freq_stop": None,
        "freq_points": None,
        "freq_scale": "log",
        "hint": None,
        "window": 0.5,
    },
    "fcs": {"t": None, "route": "cgf"},
    "ld": {"x": 0.0, "t": None},
    "scba-spectral": {"freq": 0.0, "spin": "up"},
    "scba-iv": {},
    "oracle": {"name": None},
}

# options echoed as CSV columns (when not already a sweep axis)
ECHO = {
    "noise": ("freq",),
    "charge-noise": ("freq",),
    "circuit-noise": ("freq", "alpha"),
    "fcs": ("t",),
    "ld": ("x",),
    "scba-spectral": ("freq",),
}

ANDERSON_PARAMS = {"eps0": 0.0, "U": 0.0, "gamma_l": 0.5, "gamma_r": 0.5, "W": math.inf, "T": 0.0, "zeeman": 0.0, "V": 0.0, "mode": "hf", "with_pm": 1.0}

MODEL_PARAMS: dict[str, set[str]] = {
    "single_level": {"mu_l", "mu_r", "T_l", "T_r", "T", "gamma_l", "gamma_r", "E0"},
    "ddab_cb": {f.name for f in dataclasses.fields(models.DdAbParams)} | {"delta", "phi"},
    "majorana": {f.name for f in dataclasses.fields(models.MajoranaParams)},
    "qubit_qpc": {f.name for f in dataclasses.fields(models.QubitQpcParams)},
    "qubit_set": {f.name for f in dataclasses.fields(models.SetParams)},
    "anderson": set(ANDERSON_PARAMS),
}
MODEL_DESCRIPTIONS = {**models.CATALOG, "anderson": "spinful level with on-site U between Lorentzian leads (SCBA tasks)"}

RUN_KEYS = {"task", "model", "junction", "output"}
SWEEP_KEYS = {"start", "stop", "points", "scale"}
TOLERANCE_KEYS = {"positivity_tol", "quad_tol", "fixed_point_tol"}
CHECK_KINDS = {
    "oracle": {"kind", "oracle", "column", "rtol", "atol", "component"},
    "minimum": {"kind", "column", "axis", "lo", "hi", "expected", "rtol"},
    "exceeds": {"kind", "column", "value"},
    "peaks": {"kind", "column", "axis", "expected", "atol"},
    "ratio": {"kind", "numerator", "denominator", "value"},
}


# ------------------------------------------------------------ expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "abs": abs}


def evaluate_expression(text: str, names: dict[str, float] | None = None) -> float:
    """Evaluate plain arithmetic over numbers, ``pi``, ``inf`` and ``names``."""
    scope = {"pi": math.pi, "inf": math.inf, **(names or {})}

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](walk(node.operand))
        if isinstance(node, ast.Name):
            if node.id not in scope:
                raise ValueError(f"unknown name {node.id!r}")
            return float(scope[node.id])
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1:
            return float(_FUNCS[node.func.id](walk(node.args[0])))
        raise ValueError(f"unsupported expression element {ast.dump(node)[:40]}")

    try:
        return walk(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {text!r}") from exc


def _value(text: str):
    """Number if the text evaluates to one, otherwise the stripped string."""
    try:
        return evaluate_expression(text)
    except ValueError:
        return text.strip()


# ------------------------------------------------------------- config


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.start])
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class RunConfig:
    task: str
    model: str | None
    junction: str = "right"
    params: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    sweeps: tuple[SweepAxis, ...] = ()
    output: str | None = None
    tolerances: dict = field(default_factory=dict)
    check: dict | None = None
    check_params: dict = field(default_factory=dict)

    def grid(self) -> list[dict[str, float]]:
        """Sweep points in row order (first axis slowest)."""
        if not self.sweeps:
            return [{}]
        names = [a.name for a in self.sweeps]
        return [dict(zip(names, combo)) for combo in itertools.product(*(a.values() for a in self.sweeps))]


def _line_index(text: str) -> tuple[dict, dict]:
    sections, keys = {}, {}
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            sections.setdefault(current, no)
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and current is not None:
            keys.setdefault((current, m.group(1).strip()), no)
    return sections, keys


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration.

    Raises
    ------
    SchemaError
        Listing every problem found, each with its line number.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"), strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SchemaError([f"syntax: {exc}".replace("\n", " ")]) from exc
    sec_line, key_line = _line_index(text)
    problems: list[str] = []

    def where(section, key=None):
        no = key_line.get((section, key)) if key else sec_line.get(section)
        return f"line {no}" if no else "config"

    def bad(section, key, msg):
        problems.append(f"{where(section, key)}: [{section}]{' ' + key if key else ''}: {msg}")

    known_sections = {"run", "params", "task", "tolerances", "check", "check.params"}
    for s in parser.sections():
        if s not in known_sections and not s.startswith("sweep."):
            bad(s, None, "unknown section")

    if not parser.has_section("run"):
        raise SchemaError(["config: missing [run] section"] + problems)
    run = parser["run"]
    for k in run:
        if k not in RUN_KEYS:
            bad("run", k, f"unknown key {k!r}")
    task = run.get("task", "").strip()
    if task not in TASKS:
        bad("run", "task", f"task must be one of {', '.join(TASKS)}, got {task!r}")
    model = run.get("model", "").strip() or None
    if task == "oracle":
        if model:
            bad("run", "model", "the oracle task takes no model")
    elif task in SCBA_TASKS:
        if model != "anderson":
            bad("run", "model", f"{task} needs model = anderson")
    elif task in TASKS:
        if model not in models.CATALOG:
            bad("run", "model", f"model must be one of {', '.join(models.CATALOG)}, got {model!r}")
    junction = run.get("junction", "right").strip()
    if junction not in ("left", "right"):
        bad("run", "junction", "junction must be left or right")

    params: dict[str, Any] = {}
    if parser.has_section("params"):
        allowed = MODEL_PARAMS.get(model or "", None)
        for k, v in parser["params"].items():
            if task == "oracle":
                params[k] = _value(v)
                continue
            if allowed is not None and k not in allowed:
                bad("params", k, f"unknown parameter {k!r} for model {model}")
                continue
            params[k] = _value(v)

    options = dict(TASK_OPTIONS.get(task, {}))
    if parser.has_section("task"):
        for k, v in parser["task"].items():
            if k not in options:
                bad("task", k, f"unknown option {k!r} for task {task}")
                continue
            options[k] = _value(v)
    if task == "oracle":
        name = options.get("name")
        if name not in oracles.ORACLES:
            bad("task", "name", f"oracle name must be one of {', '.join(oracles.oracle_names())}")
    if task == "fcs" and options.get("route") not in ("cgf", "ladder", "moments"):
        bad("task", "route", "route must be cgf, ladder or moments")

    sweeps = []
    for s in parser.sections():
        if not s.startswith("sweep."):
            continue
        name = s[len("sweep.") :]
        sec = parser[s]
        for k in sec:
            if k not in SWEEP_KEYS:
                bad(s, k, f"unknown key {k!r}")
        target_ok = name in params or name in options or (model in MODEL_PARAMS and name in MODEL_PARAMS[model])
        if task == "oracle" and options.get("name") in oracles.ORACLES and name in oracles.parameters(options["name"]):
            target_ok = True
        if not target_ok:
            bad(s, None, f"sweep axis {name!r} is not a parameter of model {model} or task {task}")
        try:
            start = evaluate_expression(sec.get("start", ""))
            stop = evaluate_expression(sec.get("stop", sec.get("start", "")))
        except ValueError as exc:
            bad(s, "start", str(exc))
            continue
        try:
            points = int(evaluate_expression(sec.get("points", "1")))
        except ValueError as exc:
            bad(s, "points", str(exc))
            continue
        if points < 1:
            bad(s, "points", "points must be at least 1")
        scale = sec.get("scale", "linear").strip()
        if scale not in ("linear", "log"):
            bad(s, "scale", "scale must be linear or log")
        elif scale == "log" and (start <= 0 or stop <= 0):
            bad(s, "scale", "log sweeps need positive start and stop")
        sweeps.append(SweepAxis(name, start, stop, max(points, 1), scale))

    tolerances = {}
    if parser.has_section("tolerances"):
        for k, v in parser["tolerances"].items():
            if k not in TOLERANCE_KEYS:
                bad("tolerances", k, f"unknown tolerance {k!r}")
                continue
            tolerances[k] = _value(v)

    check = None
    check_params = {}
    if parser.has_section("check"):
        check = {k: v.strip() for k, v in parser["check"].items()}
        kind = check.get("kind", "oracle")
        check["kind"] = kind
        if kind not in CHECK_KINDS:
            bad("check", "kind", f"kind must be one of {', '.join(CHECK_KINDS)}")
        else:
            for k in check:
                if k not in CHECK_KINDS[kind]:
                    bad("check", k, f"unknown key {k!r} for check kind {kind}")
            if kind == "oracle" and check.get("oracle") not in oracles.ORACLES:
                bad("check", "oracle", f"unknown oracle {check.get('oracle')!r}")
    if parser.has_section("check.params"):
        check_params = dict(parser["check.params"].items())

    if problems:
        raise SchemaError(problems)
    return RunConfig(
        task=task,
        model=model,
        junction=junction,
        params=params,
        options=options,
        sweeps=tuple(sweeps),
        output=run.get("output", "").strip() or None,
        tolerances=tolerances,
        check=check,
        check_params=check_params,
    )


# ---------------------------------------------------------------- tasks


def _split(cfg: RunConfig, point: dict) -> tuple[dict, dict]:
    params = dict(cfg.params)
    options = dict(cfg.options)
    for k, v in point.items():
        if k in options and not (cfg.model in MODEL_PARAMS and k in MODEL_PARAMS[cfg.model]):
            options[k] = v
        else:
            params[k] = v
    return params, options


def _catalog_params(model: str, params: dict) -> dict:
    out = dict(params)
    if model == "qubit_set" and "model" in out:
        out["model"] = str(out["model"]).replace(".0", "")
    return out


def _anderson(params: dict) -> tuple[scba.AndersonParams, str, bool]:
    p = {**ANDERSON_PARAMS, **params}
    T = float(p["T"])
    W = float(p["W"])
    left = scba.LorentzianBand(float(p["gamma_l"]), W, 0.0, T)
    right = scba.LorentzianBand(float(p["gamma_r"]), W, 0.0, T)
    base = scba.AndersonParams(float(p["eps0"]), float(p["U"]), left, right, float(p["zeeman"]))
    return scba.symmetric_bias(base, float(p["V"])), str(p["mode"]), bool(p["with_pm"])


def _freq_grid(options: dict) -> np.ndarray:
    start, stop, n = options["freq_start"], options["freq_stop"], int(options["freq_points"])
    if options.get("freq_scale", "log") == "log":
        return np.geomspace(start, stop, n)
    return np.linspace(start, stop, n)


def _row(cfg: RunConfig, point: dict) -> dict[str, Any]:
    params, opt = _split(cfg, point)
    task = cfg.task
    tol = cfg.tolerances
    if task == "oracle":
        res = oracles.evaluate(opt["name"], **params)
        v = res.value
        if isinstance(v, tuple):
            return {f"value_{i}": x for i, x in enumerate(v)}
        return {"value": v}
    if task in SCBA_TASKS:
        p, mode, with_pm = _anderson(params)
        kw = {"tol": tol["fixed_point_tol"]} if "fixed_point_tol" in tol else {}
        fp = scba.occupations_fixed_point(p, mode, with_pm, **kw)
        n = fp.occupations
        if task == "scba-iv":
            current = scba.anderson_current(p, n, mode, with_pm, **({"tol": tol["quad_tol"]} if "quad_tol" in tol else {}))
            return {"current": current, "n_up": n[0], "n_down": n[1], "iterations": fp.iterations}
        spin = str(opt["spin"])
        phi = complex(scba.phi_anderson(p, float(opt["freq"]), n[1 - scba.SPINS.index(spin)], spin, mode, with_pm))
        return {"re_phi": phi.real, "im_phi": phi.imag, "A": 2 * phi.real, "n_up": n[0], "n_down": n[1]}

    gen = models.build(cfg.model, _catalog_params(cfg.model, params), cfg.junction)
    rho = liouville.steady_state(gen, tol.get("positivity_tol"))
    if task == "steady":
        return {"current": observables.stationary_current(gen, rho), "min_eig": float(np.min(np.linalg.eigvalsh(rho)))}
    if task == "noise":
        w = float(opt["freq"])
        s = observables.zero_freq_noise(gen, rho) if w == 0 else observables.macdonald_spectrum(gen, w, rho)
        return {"S": s, "current": observables.stationary_current(gen, rho)}
    if task == "charge-noise":
        return {"S_N": observables.charge_noise(gen, float(opt["freq"]), rho)}
    if task == "circuit-noise":
        other = "left" if cfg.junction == "right" else "right"
        g_l = gen if cfg.junction == "left" else models.build(cfg.model, _catalog_params(cfg.model, params), other)
        g_r = gen if cfg.junction == "right" else models.build(cfg.model, _catalog_params(cfg.model, params), other)
        alpha = float(opt["alpha"])
        if opt["freq_points"] is None:
            w = np.array([float(opt["freq"])])
        else:
            w = _freq_grid(opt)
        s_l = observables.junction_spectrum(g_l, w, rho)
        s_r = observables.junction_spectrum(g_r, w, rho)
        s_n = observables.charge_spectrum(g_r, w, rho)
        circ = observables.circuit_noise(s_l, s_r, s_n, alpha)
        cross = observables.cross_spectrum(s_l, s_r, s_n)
        if opt["freq_points"] is None:
            return {
                "S_L": s_l.values[0],
                "S_R": s_r.values[0],
                "S_N": s_n.values[0],
                "S_circuit": circ.values[0],
                "S_cross": cross.values[0],
                "current": s_r.current,
            }
        hint = opt["hint"]
        return {
            "snr_circuit": observables.snr(circ, float(hint), window=float(opt["window"])) if hint is not None else math.nan,
            "pedestal_circuit": observables.pedestal(circ),
            "pedestal_left": observables.pedestal(s_l),
            "pedestal_right": observables.pedestal(s_r),
            "pedestal_cross": observables.pedestal(cross),
            "current": s_r.current,
        }
    if task == "fcs":
        t = float(opt["t"]) if opt["t"] is not None else 200.0 / gen.rate_scale
        route = opt["route"]
        if route == "cgf":
            rec = counting.cgf_cumulants(gen, t, rho0=rho)
        elif route == "ladder":
            rec = counting.cumulants_from_distribution(counting.evolve_ladder(gen, rho, t))
        else:
            rec = counting.moment_cumulants(gen, t, rho)
        return {"t_used": t, "C1": rec.c1, "C2": rec.c2, "C3": rec.c3, "C4": rec.c4, "current": observables.stationary_current(gen, rho)}
    if task == "ld":
        x = float(opt["x"])
        out = {"lambda": counting.ld_lambda(gen, x)}
        if opt["t"] is not None:
            s = counting.ld_finite_time(gen, x, float(opt["t"]), rho0=rho)
            out.update({"lambda_t": s.lam, "F1": s.F[0], "F2": s.F[1]})
        return out
    raise AssertionError(task)


def _safe_row(cfg: RunConfig, point: dict) -> tuple[dict, str]:
    try:
        return _row(cfg, point), ""
    except NresolvedError as exc:
        ctx = f"{cfg.model or cfg.options.get('name')} at {point}" if point else (cfg.model or "")
        return {}, f"{type(exc).__name__}: {exc} ({ctx})".replace("\n", " ")


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


@dataclass
class RunResult:
    columns: list[str]
    rows: list[dict]
    flags: list[str]

    def column(self, name: str) -> np.ndarray:
        return np.array([float(r.get(name, math.nan)) for r in self.rows])

    @property
    def flagged(self) -> int:
        return sum(1 for f in self.flags if f)


def execute(cfg: RunConfig, threads: int = 1) -> RunResult:
    """Evaluate every sweep point; results come back in sweep order."""
    points = cfg.grid()
    if threads > 1 and len(points) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda pt: _safe_row(cfg, pt), points))
    else:
        results = [_safe_row(cfg, pt) for pt in points]
    axes = [a.name for a in cfg.sweeps]
    echo = [k for k in ECHO.get(cfg.task, ()) if k not in axes]
    outputs: list[str] = []
    for out, _ in results:
        for k in out:
            if k not in outputs:
                outputs.append(k)
    columns = axes + echo + outputs + ["flag"]
    rows = []
    for pt, (out, flag) in zip(points, results):
        _, opt = _split(cfg, pt)
        row = {**pt, **{k: opt[k] for k in echo}}
        for k in outputs:
            row[k] = out.get(k, math.nan)
        row["flag"] = flag
        rows.append(row)
    return RunResult(columns, rows, [f for _, f in results])


def to_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([_fmt(row[c]) for c in result.columns])
    return buf.getvalue()


def metadata(cfg: RunConfig, result: RunResult) -> dict:
    # swept keys live in the "sweeps" entry, not as their unused defaults
    axes = {a.name for a in cfg.sweeps}
    return {
        "task": cfg.task,
        "model": cfg.model,
        "junction": cfg.junction,
        "params": {k: v for k, v in cfg.params.items() if k not in axes},
        "options": {k: v for k, v in cfg.options.items() if k not in axes},
        "sweeps": [dataclasses.asdict(a) for a in cfg.sweeps],
        "tolerances": {
            "positivity_tol": cfg.tolerances.get("positivity_tol", "model default"),
            "quad_tol": cfg.tolerances.get("quad_tol", "module default"),
            "fixed_point_tol": cfg.tolerances.get("fixed_point_tol", scba.FIXED_POINT_TOL),
        },
        "columns": result.columns,
        "rows": len(result.rows),
        "flagged_rows": result.flagged,
        "versions": {"nresolved": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }


def write_outputs(cfg: RunConfig, result: RunResult, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(result))
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(metadata(cfg, result), fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


# ---------------------------------------------------------------- checks


@dataclass(frozen=True)
class CheckReport:
    kind: str
    deviation: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"check {self.kind}: deviation {self.deviation:.3e} (tolerance {self.tolerance:.3e}) {verdict} {self.detail}".rstrip()


def _row_scope(cfg: RunConfig, row: dict) -> dict:
    scope = {k: v for k, v in cfg.params.items() if isinstance(v, float)}
    scope.update({k: v for k, v in cfg.options.items() if isinstance(v, float)})
    scope.update({k: v for k, v in row.items() if isinstance(v, (int, float, np.floating)) and not isinstance(v, bool)})
    return scope


def run_check(cfg: RunConfig, result: RunResult) -> CheckReport:
    """Compare a run against its ``[check]`` section."""
    if cfg.check is None:
        raise SchemaError(["config: no [check] section to run"])
    c = cfg.check
    kind = c["kind"]
    if kind == "oracle":
        fn, _ = oracles.ORACLES[c["oracle"]]
        names = oracles.parameters(c["oracle"])
        rtol = float(c.get("rtol", "1e-8"))
        atol = float(c.get("atol", "0"))
        col = c.get("column", "value")
        worst = 0.0
        for row in result.rows:
            scope = _row_scope(cfg, row)
            args = {}
            for n in names:
                if n in cfg.check_params:
                    args[n] = evaluate_expression(cfg.check_params[n], scope)
                elif n in scope:
                    args[n] = scope[n]
                else:
                    raise SchemaError([f"check: oracle parameter {n!r} is neither a column nor mapped in [check.params]"])
            ref = fn(**args)
            comp = c.get("component", "")
            if isinstance(ref, tuple):
                ref = sum(ref) if comp in ("", "sum") else ref[int(comp)]
            ref = float(np.real(ref))
            got = float(row[col])
            dev = abs(got - ref) / max(abs(ref), atol / rtol if rtol > 0 else 0.0, 1e-300) if ref != 0 or atol == 0 else abs(got)
            worst = max(worst, dev if np.isfinite(dev) else math.inf)
        return CheckReport(kind, worst, rtol, worst <= rtol, f"{c['oracle']} vs column {col}")
    if kind == "minimum":
        axis, col = c["axis"], c.get("column", "S")
        spec = observables.NoiseSpectrum(result.column(axis), result.column(col), "check")
        found = observables.local_minimum(spec, float(c["lo"]), float(c["hi"]))
        expected = evaluate_expression(c["expected"], _row_scope(cfg, {}))
        dev = abs(found - expected) / abs(expected)
        rtol = float(c.get("rtol", "0.1"))
        return CheckReport(kind, dev, rtol, dev <= rtol, f"minimum of {col} at {axis} = {found:.6g}, expected {expected:.6g}")
    if kind == "exceeds":
        col = c["column"]
        vals = result.column(col)
        target = float(c["value"])
        best = float(np.nanmax(vals))
        return CheckReport(kind, best, target, best > target, f"max {col} = {best:.6g} must exceed {target:g}")
    if kind == "ratio":
        num, den = np.abs(result.column(c["numerator"])), np.abs(result.column(c["denominator"]))
        ratio = float(np.nanmin(den / num))
        target = float(c["value"])
        return CheckReport(kind, ratio, target, ratio >= target, f"min |{c['denominator']}|/|{c['numerator']}| = {ratio:.4g}")
    if kind == "peaks":
        axis, col = c["axis"], c.get("column", "current")
        x, y = result.column(axis), result.column(col)
        slope = np.gradient(y, x)
        interior = [i for i in range(1, len(x) - 1) if slope[i] > slope[i - 1] and slope[i] >= slope[i + 1]]
        expected = [evaluate_expression(e, _row_scope(cfg, {})) for e in c["expected"].split(",")]
        atol = evaluate_expression(c.get("atol", "0"), _row_scope(cfg, {}))
        worst = 0.0
        found = []
        for e in expected:
            if not interior:
                worst = math.inf
                break
            i = min(interior, key=lambda j: abs(x[j] - e))
            found.append(float(x[i]))
            worst = max(worst, abs(x[i] - e))
        return CheckReport(kind, worst, atol, worst <= atol, f"slope maxima of {col} near {found}")
    raise AssertionError(kind)


# ------------------------------------------------------------------ main


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise SystemExit(f"{THREADS_ENV} must be an integer, got {env!r}")
        return max(1, n)
    return 1


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nresolved", description="Batch runner for counting-resolved transport calculations.")
    p.add_argument("--version", action="version", version=f"nresolved {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def run_like(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="INI run configuration")
        sp.add_argument("-o", "--output", help="CSV path (overrides [run] output)")
        sp.add_argument("--threads", type=_positive_int, default=None, help=f"worker threads (default: ${THREADS_ENV} or 1)")
        sp.add_argument("--allow-flags", action="store_true", help="exit 0 even if some rows raised numerical flags")
        out = sp.add_mutually_exclusive_group()
        out.add_argument("--stdout", action="store_true", help="print the CSV instead of writing files")
        out.add_argument("--no-output", action="store_true", help="compute without writing CSV")
        return sp

    r = run_like("run", "evaluate a configuration and write CSV")
    r.add_argument("--check", action="store_true", help="also compare against the [check] section")
    run_like("check", "evaluate a configuration and compare with its [check] section")

    o = sub.add_parser("oracle", help="evaluate a closed-form result")
    o.add_argument("name", nargs="?", help="oracle name (omit with --list)")
    o.add_argument("params", nargs="*", help="key=value arguments")
    o.add_argument("--list", action="store_true", help="list oracles and their parameters")

    sub.add_parser("models", help="list the model catalog")
    return p


def _cmd_run(args, check: bool) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(text)
    except SchemaError as exc:
        print("schema errors:", file=sys.stderr)
        for prob in exc.problems:
            print(f"  {prob}", file=sys.stderr)
        return EXIT_FAIL
    if check and cfg.check is None:
        print("error: configuration has no [check] section", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = execute(cfg, _threads(args.threads))
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.stdout:
        sys.stdout.write(to_csv(result))
    elif not args.no_output:
        path = args.output or cfg.output
        if path is None:
            base = os.path.splitext(os.path.basename(args.config))[0]
            path = base + ".csv"
        elif not os.path.isabs(path) and args.output is None:
            path = os.path.join(os.path.dirname(os.path.abspath(args.config)), path)
        write_outputs(cfg, result, path)
        print(f"wrote {len(result.rows)} rows to {path}", file=sys.stderr)
    code = EXIT_OK
    for f in result.flags:
        if f:
            print(f"flag: {f}", file=sys.stderr)
    if result.flagged and not args.allow_flags:
        code = EXIT_FLAGGED
    if check:
        try:
            report = run_check(cfg, result)
        except (SchemaError, NresolvedError, ValueError) as exc:
            print(f"check error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        print(report.line())
        if not report.passed:
            code = EXIT_FAIL
    return code


def _cmd_oracle(args) -> int:
    if args.list or not args.name:
        for name in oracles.oracle_names():
            print(f"{name}({', '.join(oracles.parameters(name))}): {oracles.ORACLES[name][1]}")
        return EXIT_OK
    kwargs = {}
    for item in args.params:
        if "=" not in item:
            print(f"error: expected key=value, got {item!r}", file=sys.stderr)
            return EXIT_USAGE
        k, v = item.split("=", 1)
        kwargs[k.strip()] = evaluate_expression(v)
    try:
        res = oracles.evaluate(args.name, **kwargs)
    except (KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NresolvedError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    vals = res.value if isinstance(res.value, tuple) else (res.value,)
    print(",".join([res.name] + [_fmt(v) for v in vals] + list(res.flags)))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "models":
        for name, desc in MODEL_DESCRIPTIONS.items():
            print(f"{name}: {desc}")
            print(f"    parameters: {', '.join(sorted(MODEL_PARAMS[name]))}")
        return EXIT_OK
    if args.command == "oracle":
        return _cmd_oracle(args)
    return _cmd_run(args, check=(args.command == "check" or getattr(args, "check", False)))


if __name__ == "__main__":
    sys.exit(main())
