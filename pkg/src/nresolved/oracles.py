"""Closed-form transport results used as ground truth.

Nothing here calls the numerical modules: every function is a direct
transcription of an analytic expression, so a disagreement in the test suite
points at the numerics rather than at shared code. ``evaluate`` wraps the
functions for the command line and echoes the parameters with a formula tag.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class OracleResult:
    name: str
    tag: str
    value: float | tuple
    params: dict
    flags: tuple[str, ...] = field(default_factory=tuple)


# ------------------------------------------------------------ double dot


def ddab_nonint_current(gamma_l: float, gamma_r: float, delta: float, phi: float) -> float:
    """Large-bias current of two noninteracting dots in an Aharonov-Bohm ring.

    ``I₀ (Δ² + Γ_LΓ_R sin²φ) / (Δ² + Γ_LΓ_R sin²(φ/2))`` with
    ``I₀ = 2Γ_LΓ_R/Γ``. At ``Δ = 0`` and ``φ ∈ 2πℤ`` the ratio is 0/0 and
    ``I₀`` is returned (use :func:`evaluate` to see the flag).
    """
    g = gamma_l + gamma_r
    i0 = 2 * gamma_l * gamma_r / g
    num = delta**2 + gamma_l * gamma_r * np.sin(phi) ** 2
    den = delta**2 + gamma_l * gamma_r * np.sin(phi / 2) ** 2
    if den == 0:
        return i0
    return i0 * num / den


def ddab_cb_current(gamma_l: float, gamma_r: float, delta: float, phi: float) -> float:
    """Stationary current of the Coulomb-blockaded double-dot interferometer.

    ``I_C Δ² / (Δ² + I_C (2Γ_R sin²(φ/2) − Δ sin φ))`` with
    ``I_C = 2Γ_LΓ_R/(2Γ_L + Γ_R)``. At ``Δ = 0`` it switches: ``I_C`` for
    ``φ ∈ 2πℤ`` and exactly 0 otherwise.
    """
    ic = 2 * gamma_l * gamma_r / (2 * gamma_l + gamma_r)
    if delta == 0:
        return ic if _is_multiple(phi, 2 * np.pi) else 0.0
    return ic * delta**2 / (delta**2 + ic * (2 * gamma_r * np.sin(phi / 2) ** 2 - delta * np.sin(phi)))


def _is_multiple(x: float, period: float, tol: float = 1e-12) -> bool:
    r = np.remainder(x, period)
    return bool(min(r, period - r) <= tol * max(1.0, abs(x)))


def ddab_noise(gamma_l: float, gamma_r: float, delta: float, omega):
    """Current noise of the blockaded double dot at ``φ = 2πn``.

    Uses the stationary current ``Ī = I_C`` of that case.
    """
    gl, gr = gamma_l, gamma_r
    w = np.asarray(omega, dtype=float)
    ibar = 2 * gl * gr / (2 * gl + gr)
    num = 8 * gl * gr * (2 * gl * gr * delta**2 - delta**4 + 3 * delta**2 * w**2 - 2 * w**2 * (gr**2 + w**2)) * ibar
    den = ((2 * gl + gr) * delta**2 - (2 * gl + 3 * gr) * w**2) ** 2 + w**2 * (2 * gl * gr + 2 * gr**2 + delta**2 - w**2) ** 2
    return num / den + 2 * ibar


def ddab_fano(gamma_l: float, gamma_r: float, delta: float) -> float:
    """Zero-frequency Fano factor of the blockaded double dot; diverges as ``Δ⁻²``."""
    if delta == 0:
        raise DomainError("the double-dot Fano factor diverges at Δ = 0")
    gl, gr = gamma_l, gamma_r
    return (8 * gl**2 * gr**2 + (4 * gl**2 + gr**2) * delta**2) / ((2 * gl + gr) ** 2 * delta**2)


def single_level_fano(gamma_l: float, gamma_r: float) -> float:
    """``(Γ_L² + Γ_R²)/Γ²``: Fano factor of one resonant level at large bias.

    Also the double-dot value when ``Δ → 0`` is taken before ``ω → 0``.
    """
    return (gamma_l**2 + gamma_r**2) / (gamma_l + gamma_r) ** 2


def dd_transformed_coupling(t1l: float, t2l: float, t1r: float, t2r: float, phi: float, phi_2l: float = 0.0, phi_1r: float = 0.0) -> complex:
    """Left coupling of the rotated dot state that is dark to the right lead.

    ``−e^{i(φ_2L − φ_1R)} (t̄_1L t̄_2R e^{iφ} − t̄_2L t̄_1R) / 𝒩`` with
    ``𝒩 = (t̄_1R² + t̄_2R²)^{1/2}``.
    """
    norm = np.hypot(t1r, t2r)
    if norm == 0:
        raise DomainError("both right couplings vanish")
    return complex(-np.exp(1j * (phi_2l - phi_1r)) * (t1l * t2r * np.exp(1j * phi) - t2l * t1r) / norm)


# ------------------------------------------------------------- Majorana


def majorana_fano_diff(gamma0: float, eps_m: float, lam: float, lam1: float) -> float:
    """Fano-factor excess of a Majorana over a regular bound state (symmetric leads).

    ``2λ²λ₁² / ((Γ₀² + ε_M²)(λ² + λ₁²) + 4λ²λ₁²)``; zero if either coupling is.
    """
    num = 2 * lam**2 * lam1**2
    if num == 0:
        return 0.0
    return num / ((gamma0**2 + eps_m**2) * (lam**2 + lam1**2) + 4 * lam**2 * lam1**2)


def majorana_fano_asym(gamma_l: float, gamma_r: float, lam: float) -> tuple[float, float]:
    """``(F_L, F_R)`` for ``ε_M → 0`` and ``ε_D = 0`` with ``y = Γ_R/Γ_L``."""
    if gamma_l <= 0 or gamma_r <= 0:
        raise DomainError("both lead couplings must be positive")
    g = gamma_l + gamma_r
    y = gamma_r / gamma_l
    base = single_level_fano(gamma_l, gamma_r)
    pref = 8 * gamma_l * gamma_r * lam**2 / (g**2 * (g**2 + 8 * lam**2) ** 2)
    f_r = base + pref * ((5 - 3 * y) * g**2 + 16 * lam**2)
    f_l = base + pref * ((5 - 3 / y) * g**2 + 16 * lam**2)
    return f_l, f_r


# ------------------------------------------------------------- qubit + QPC


def _qpc_g(delta: float, V: float, T: float) -> tuple[float, float]:
    """``G^(±) = [F(Δ+V) ± F(Δ−V)]/2`` with ``F(x) = x coth(x/2T)`` (``|x|`` at T = 0)."""

    def f(x):
        if T == 0:
            return abs(x)
        if x == 0:
            return 2 * T
        return x / np.tanh(x / (2 * T))

    fp, fm = f(delta + V), f(delta - V)
    return 0.5 * (fp + fm), 0.5 * (fp - fm)


def _coth_v(V: float, T: float) -> float:
    """``V coth(V/2T)``, continuous through ``V = 0`` and ``T = 0``."""
    if T == 0:
        return abs(V)
    if V == 0:
        return 2 * T
    return V / np.tanh(V / (2 * T))


def qpc_current(eta: float, T0: float, kappa: float, delta: float, V: float, T: float) -> float:
    """Stationary point-contact current for a symmetric qubit.

    ``g₀V + g₁V [1 − 2G⁻/V + (Δ/V) G⁻/G⁺]`` with ``g₀ = η(𝒯₀ + κ/2)²`` and
    ``g₁ = η(κ/2)²``.
    """
    if V == 0:
        raise DomainError("the closed form is written per unit voltage; V must be nonzero")
    g0 = eta * (T0 + kappa / 2) ** 2
    g1 = eta * (kappa / 2) ** 2
    gp, gm = _qpc_g(delta, V, T)
    return g0 * V + g1 * V * (1 - 2 * gm / V + delta / V * gm / gp)


def qpc_spectrum(eta: float, T0: float, kappa: float, delta: float, V: float, T: float, omega):
    """``(S₀, S₁(ω), S₂(ω))`` of the point-contact output for a symmetric qubit.

    The total spectrum is their sum; ``S₁`` is the Lorentzian peak at the
    qubit frequency and ``S₂`` the relaxation-induced inelastic part.
    """
    w = np.asarray(omega, dtype=float)
    gp, gm = _qpc_g(delta, V, T)
    ia = eta * (T0 + kappa) ** 2 * V
    ib = eta * T0**2 * V
    i0 = 0.5 * (ia + ib)
    idd = ia - ib
    chi2 = kappa**2
    ibar = i0 - 0.25 * eta * chi2 * delta * gm / gp
    gam_d = 0.5 * eta * chi2 * gp
    gam = 0.5 * eta * chi2 * delta
    dz = -delta * np.sqrt(ia * ib) / gp - eta * chi2 * gm / 4
    cv = _coth_v(V, T)
    s0 = 2 * i0 * cv / V + 0.5 * chi2 * eta * (gp - delta**2 / gp - cv)
    if kappa == 0:
        # the peak keeps a finite height but zero width; its weight vanishes
        s1 = np.zeros_like(w)
    else:
        s1 = (1 - delta / (2 * V) * gm / gp) * idd**2 * gam_d * delta**2 / ((w**2 - delta**2) ** 2 + gam_d**2 * w**2)
    s2 = chi2 * eta * (gam_d * dz + gam * ibar) * gm / (w**2 + gam_d**2)
    return s0, s1, s2


def qpc_noise_total(eta: float, T0: float, kappa: float, delta: float, V: float, T: float, omega):
    """``S₀ + S₁(ω) + S₂(ω)`` of :func:`qpc_spectrum`."""
    s0, s1, s2 = qpc_spectrum(eta, T0, kappa, delta, V, T, omega)
    return s0 + s1 + s2


# ------------------------------------------------------ Markovian spectra


def single_level_noise_mkv(gamma_l: float, gamma_r: float, current: float, omega):
    """``2Ī (Γ_L² + Γ_R² + ω²)/(Γ² + ω²)`` for one level at large bias."""
    w = np.asarray(omega, dtype=float)
    g = gamma_l + gamma_r
    return 2 * current * (gamma_l**2 + gamma_r**2 + w**2) / (g**2 + w**2)


def cb_noise_mkv(gamma_l: float, gamma_r: float, current: float, omega):
    """``2Ī (4Γ_L² + Γ_R² + ω²)/((2Γ_L + Γ_R)² + ω²)`` for a spin-degenerate blockaded level."""
    w = np.asarray(omega, dtype=float)
    return 2 * current * (4 * gamma_l**2 + gamma_r**2 + w**2) / ((2 * gamma_l + gamma_r) ** 2 + w**2)


# ------------------------------------------------------------ Anderson


def kondo_temperature(gamma0: float, eps0: float, U: float) -> float:
    """Kondo scale ``(U/2π) √(−2UΓ/(ε₀(U+ε₀))) exp[πε₀(U+ε₀)/(2UΓ)]``.

    ``gamma0`` is the coupling to *each* of two symmetric leads; the formula
    takes the total width ``Γ = 2Γ₀``. Requires ``−U < ε₀ < 0``.
    """
    if not (-U < eps0 < 0) or gamma0 <= 0:
        raise DomainError("the Kondo scale needs gamma0 > 0 and a singly occupied level (−U < ε₀ < 0)")
    g = 2 * gamma0
    return U / (2 * np.pi) * np.sqrt(-2 * U * g / (eps0 * (U + eps0))) * np.exp(np.pi * eps0 * (U + eps0) / (2 * U * g))


# ------------------------------------------------------------- registry

ORACLES: dict[str, tuple[Callable, str]] = {
    "ddab_nonint_current": (ddab_nonint_current, "double-dot noninteracting large-bias current"),
    "ddab_cb_current": (ddab_cb_current, "double-dot Coulomb-blockade current"),
    "ddab_noise": (ddab_noise, "double-dot Coulomb-blockade noise spectrum"),
    "ddab_fano": (ddab_fano, "double-dot Coulomb-blockade Fano factor"),
    "single_level_fano": (single_level_fano, "single-level Fano factor"),
    "dd_transformed_coupling": (dd_transformed_coupling, "dark-state left coupling"),
    "majorana_fano_diff": (majorana_fano_diff, "Majorana minus regular Fano factor"),
    "majorana_fano_asym": (majorana_fano_asym, "asymmetric Majorana Fano factors"),
    "qpc_current": (qpc_current, "qubit point-contact current"),
    "qpc_spectrum": (qpc_spectrum, "qubit point-contact spectrum parts"),
    "qpc_noise_total": (qpc_noise_total, "qubit point-contact total spectrum"),
    "single_level_noise_mkv": (single_level_noise_mkv, "single-level Markovian noise"),
    "cb_noise_mkv": (cb_noise_mkv, "blockaded-level Markovian noise"),
    "kondo_temperature": (kondo_temperature, "Kondo temperature"),
}


def oracle_names() -> list[str]:
    return sorted(ORACLES)


def parameters(name: str) -> list[str]:
    fn, _ = _lookup(name)
    return list(inspect.signature(fn).parameters)


def _lookup(name: str):
    try:
        return ORACLES[name]
    except KeyError:
        raise KeyError(f"unknown oracle {name!r}; known: {', '.join(oracle_names())}") from None


def evaluate(name: str, **params) -> OracleResult:
    """Call oracle ``name`` and package the value with its tag and flags."""
    fn, tag = _lookup(name)
    value = fn(**params)
    flags = []
    if name == "ddab_nonint_current":
        d, phi = params["delta"], params["phi"]
        if d == 0 and _is_multiple(phi, 2 * np.pi):
            flags.append("indeterminate: 0/0 replaced by the limit I0")
    if isinstance(value, complex):
        value = (value.real, value.imag)
    elif isinstance(value, tuple):
        value = tuple(float(np.asarray(v).reshape(-1)[0]) if np.ndim(v) else float(v) for v in value)
    else:
        value = float(value)
    return OracleResult(name, tag, value, dict(params), tuple(flags))
