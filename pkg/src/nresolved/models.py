"""Model catalog: jump-resolved generators for the supported devices.

Each builder returns a :class:`~nresolved.liouville.GeneratorSet` whose
``metadata`` records the model name, its parameters and ``rate_scale`` (the
rate used to set counting times such as ``t = 200 / rate_scale``).

Transport models are written in the Markovian form

    dρ/dt = −i[H, ρ] − ½ Σ_μ { a_μ† A_μ⁽⁻⁾ ρ + ρ A_μ⁽⁺⁾ a_μ†
                               − A_αμ⁽⁻⁾ ρ a_μ† − a_μ† ρ A_αμ⁽⁺⁾ + H.c. }

with ``A_αμ⁽⁺⁾`` the lead-α operator that fills the system and ``A_αμ⁽⁻⁾`` the
one that empties it (see :func:`transport_terms`). Each Hermitian-conjugate
partner carries the jump class of the term it conjugates.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .liouville import GeneratorSet, TermSpec, assemble, lindblad_terms


def fermi(e, mu: float, T: float):
    """Fermi function; at ``T = 0`` a step with value ½ exactly at ``μ``."""
    e = np.asarray(e, dtype=float)
    if T == 0:
        return np.where(e < mu, 1.0, np.where(e > mu, 0.0, 0.5))
    return 0.5 * (1.0 - np.tanh(0.5 * (e - mu) / T))


@dataclass(frozen=True)
class LeadSpec:
    """Wide-band lead: chemical potential, temperature and tunnel rate."""

    mu: float
    T: float
    gamma: float

    def __post_init__(self):
        if self.T < 0 or self.gamma < 0:
            raise ValueError("LeadSpec needs T >= 0 and gamma >= 0")


def _jump_class(lead: str, fills: bool, junction: str) -> str:
    # forward = one more electron transferred left -> right at the junction
    if lead != junction:
        return "neutral"
    if lead == "right":
        return "backward" if fills else "forward"
    return "forward" if fills else "backward"


def transport_terms(
    a: np.ndarray,
    fill: dict[str, np.ndarray],
    empty: dict[str, np.ndarray],
    junction: str = "right",
) -> list[TermSpec]:
    """Terms of the Markovian transport generator for one system mode.

    Parameters
    ----------
    a : (d, d) array
        System annihilation operator of the mode.
    fill, empty : dict
        Per lead (``"left"``/``"right"``), the operators ``A⁽⁺⁾`` (tunnelling in)
        and ``A⁽⁻⁾`` (tunnelling out), i.e. ``a`` weighted by the lead's
        occupation or vacancy at the relevant transition energies.
    junction : str
        Counting junction.
    """
    d = a.shape[0]
    eye = np.eye(d)
    ad = a.conj().T
    terms: list[TermSpec] = []
    for lead in ("left", "right"):
        a_in = np.asarray(fill.get(lead, np.zeros((d, d))), dtype=complex)
        a_out = np.asarray(empty.get(lead, np.zeros((d, d))), dtype=complex)
        k_out = ad @ a_out
        k_in = a_in @ ad
        terms += [
            TermSpec(k_out, eye, -0.5, "neutral", f"{lead}:out-decay"),
            TermSpec(eye, k_out.conj().T, -0.5, "neutral", f"{lead}:out-decay"),
            TermSpec(eye, k_in, -0.5, "neutral", f"{lead}:in-decay"),
            TermSpec(k_in.conj().T, eye, -0.5, "neutral", f"{lead}:in-decay"),
        ]
        cls = _jump_class(lead, False, junction)
        terms += [
            TermSpec(a_out, ad, 0.5, cls, f"{lead}:out"),
            TermSpec(a, a_out.conj().T, 0.5, cls, f"{lead}:out"),
        ]
        cls = _jump_class(lead, True, junction)
        terms += [
            TermSpec(ad, a_in, 0.5, cls, f"{lead}:in"),
            TermSpec(a_in.conj().T, a, 0.5, cls, f"{lead}:in"),
        ]
    return [t for t in terms if np.any(t.left) and np.any(t.right)]


# ---------------------------------------------------------------- single level


def single_level(E0: float, left: LeadSpec, right: LeadSpec, junction: str = "right") -> GeneratorSet:
    """Spinless level ``E0`` between two wide-band leads.

    Basis ``{|0⟩, |1⟩}``. Lead α fills the level at rate ``Γ_α n_α(E0)`` and
    empties it at rate ``Γ_α [1 − n_α(E0)]``.
    """
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    fill, empty = {}, {}
    for name, lead in (("left", left), ("right", right)):
        n = float(fermi(E0, lead.mu, lead.T))
        fill[name] = lead.gamma * n * a
        empty[name] = lead.gamma * (1.0 - n) * a
    H = np.diag([0.0, E0]).astype(complex)
    meta = {
        "model": "single_level",
        "E0": E0,
        "left": asdict(left),
        "right": asdict(right),
        "rate_scale": left.gamma + right.gamma,
    }
    return assemble(transport_terms(a, fill, empty, junction), H, a.conj().T @ a, junction, meta)


# ---------------------------------------------------- double dot, AB geometry


@dataclass(frozen=True)
class DdAbParams:
    """Two parallel single-level dots in Coulomb blockade, pierced by a flux.

    ``phi_1L`` etc. are tunnelling phases; the Aharonov-Bohm phase is
    ``φ = φ_1L + φ_1R − φ_2L − φ_2R``.
    """

    E1: float = 0.5
    E2: float = -0.5
    gamma_l: float = 1.0
    gamma_r: float = 1.0
    phi_1L: float = 0.0
    phi_1R: float = 0.0
    phi_2L: float = 0.0
    phi_2R: float = 0.0

    @property
    def delta(self) -> float:
        return self.E1 - self.E2

    @property
    def phi(self) -> float:
        return self.phi_1L + self.phi_1R - self.phi_2L - self.phi_2R

    @classmethod
    def from_flux(cls, gamma_l: float, gamma_r: float, delta: float, phi: float) -> "DdAbParams":
        """Put the whole flux on the ``1L`` link and split levels symmetrically."""
        return cls(E1=delta / 2, E2=-delta / 2, gamma_l=gamma_l, gamma_r=gamma_r, phi_1L=phi)


def ddab_cb(p: DdAbParams, junction: str = "right") -> GeneratorSet:
    """Coulomb-blockaded double dot in an Aharonov-Bohm ring, large bias.

    Basis ``{|0⟩, |1⟩, |2⟩}`` (empty, dot 1, dot 2). The left lead injects
    into ``Σ_j e^{iφ_jL}|j⟩`` and the right lead drains ``Σ_j e^{iφ_jR}⟨j|``,
    each dot coupled with unit weight. The empty state therefore decays at
    ``2Γ_L``: that factor stands in for the two spin channels of the
    spinful device.
    """
    inject = np.zeros((3, 3), dtype=complex)
    drain = np.zeros((3, 3), dtype=complex)
    for j, (pl, pr) in enumerate(((p.phi_1L, p.phi_1R), (p.phi_2L, p.phi_2R)), start=1):
        inject[j, 0] = np.exp(1j * pl)
        drain[0, j] = np.exp(1j * pr)
    cls_l = "forward" if junction == "left" else "neutral"
    cls_r = "forward" if junction == "right" else "neutral"
    terms = lindblad_terms(inject, p.gamma_l, cls_l, "left:in") + lindblad_terms(drain, p.gamma_r, cls_r, "right:out")
    H = np.diag([0.0, p.E1, p.E2]).astype(complex)
    N = np.diag([0.0, 1.0, 1.0]).astype(complex)
    meta = {"model": "ddab_cb", **asdict(p), "delta": p.delta, "phi": p.phi, "rate_scale": p.gamma_l + p.gamma_r}
    return assemble(terms, H, N, junction, meta)


# ------------------------------------------------------------ Majorana probe


@dataclass(frozen=True)
class MajoranaParams:
    """Dot side-coupled to a pair of Majorana modes fused into fermion ``f``.

    ``lam1 = lam`` is the Majorana case; ``lam1 = 0`` a regular bound state.
    """

    eps_d: float = 0.0
    eps_m: float = 0.0
    lam: float = 1.0
    lam1: float = 1.0
    gamma_l: float = 1.0
    gamma_r: float = 1.0


def majorana_operators() -> tuple[np.ndarray, np.ndarray]:
    """Annihilators ``d`` and ``f`` on ``{|00⟩, |10⟩, |01⟩, |11⟩}`` (``|n_d n_f⟩``).

    States are ``(d†)^{n_d} (f†)^{n_f} |vac⟩``, so ``f†`` picks up a sign
    when the dot is occupied.
    """
    dd = np.zeros((4, 4), dtype=complex)
    fd = np.zeros((4, 4), dtype=complex)
    dd[1, 0] = dd[3, 2] = 1.0
    fd[2, 0] = 1.0
    fd[3, 1] = -1.0
    return dd.conj().T, fd.conj().T


def majorana_hamiltonian(p: MajoranaParams) -> np.ndarray:
    """``εD d†d + εM (f†f − ½) + (λ f†d + λ1 f†d† + H.c.)``."""
    d, f = majorana_operators()
    dd, fd = d.conj().T, f.conj().T
    cpl = p.lam * fd @ d + p.lam1 * fd @ dd
    return p.eps_d * dd @ d + p.eps_m * (fd @ f - 0.5 * np.eye(4)) + cpl + cpl.conj().T


def majorana(p: MajoranaParams, junction: str = "right") -> GeneratorSet:
    """Majorana probe at large bias: ``Γ_L D[d†] + Γ_R D[d]``."""
    d, _ = majorana_operators()
    cls_l = "forward" if junction == "left" else "neutral"
    cls_r = "forward" if junction == "right" else "neutral"
    terms = lindblad_terms(d.conj().T, p.gamma_l, cls_l, "left:in") + lindblad_terms(d, p.gamma_r, cls_r, "right:out")
    meta = {"model": "majorana", **asdict(p), "rate_scale": p.gamma_l + p.gamma_r}
    return assemble(terms, majorana_hamiltonian(p), d.conj().T @ d, junction, meta)


# ----------------------------------------------------------- qubit + QPC


@dataclass(frozen=True)
class QubitQpcParams:
    """Charge qubit read out by a point contact.

    ``eps`` is half the level difference, so the qubit splitting is
    ``Δ = 2√(ε² + Ω²)``. The contact transmits with amplitude ``T0 + κ``
    when the qubit is in ``|a⟩`` and ``T0`` in ``|b⟩``; ``eta = 2π g_L g_R``.
    """

    eps: float = 0.0
    omega: float = 0.5
    T0: float = 1.0
    kappa: float = 0.1
    eta: float = 1.0
    V: float = 2.0
    T: float = 1.0

    def __post_init__(self):
        if self.eta <= 0 or self.T < 0:
            raise ValueError("QubitQpcParams needs eta > 0 and T >= 0")
        if self.delta <= 0:
            raise ValueError("qubit splitting must be positive")

    @property
    def delta(self) -> float:
        return 2.0 * float(np.hypot(self.eps, self.omega))


def bias_window(x, T: float):
    """``x / (1 − e^{−x/T})``; tends to ``max(x, 0)`` as ``T → 0``."""
    x = np.asarray(x, dtype=float)
    if T == 0:
        return np.maximum(x, 0.0)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = np.where(x == 0, T, x / -np.expm1(-x / T))
    return np.where(np.isfinite(out), out, 0.0)


def qpc_spectral(x, sign: int, p: QubitQpcParams):
    """Detector spectral function ``C̃⁽±⁾`` at Liouvillian argument ``x``."""
    return p.eta * bias_window(-np.asarray(x, dtype=float) - sign * p.V, p.T)


def qubit_qpc(p: QubitQpcParams, junction: str = "right") -> GeneratorSet:
    """Qubit measured by a QPC, with energy-resolved detector rates.

    Basis ``{|a⟩, |b⟩}``. ``Q̃⁽±⁾ = C̃⁽±⁾(ℒ) Q`` is built in the qubit
    eigenbasis, where the Liouvillian acts on ``Q_ab`` as ``E_a − E_b``.
    Forward jumps are ``½[Q̃⁽⁻⁾ρQ + H.c.]``, backward ``½[Q̃⁽⁺⁾ρQ + H.c.]``.
    The contact is the only junction; ``junction`` is recorded but both
    values give the same generator.
    """
    H = np.array([[p.eps, p.omega], [p.omega, -p.eps]], dtype=complex)
    Q = np.array([[p.T0 + p.kappa, 0.0], [0.0, p.T0]], dtype=complex)
    energies, U = np.linalg.eigh(H)
    q_eig = U.conj().T @ Q @ U
    gaps = energies[:, None] - energies[None, :]
    q_tilde = {s: U @ (qpc_spectral(gaps, s, p) * q_eig) @ U.conj().T for s in (+1, -1)}
    qt = q_tilde[+1] + q_tilde[-1]
    eye = np.eye(2)
    k = Q @ qt
    terms = [
        TermSpec(k, eye, -0.5, "neutral", "decay"),
        TermSpec(eye, k.conj().T, -0.5, "neutral", "decay"),
    ]
    for s, cls in ((-1, "forward"), (+1, "backward")):
        terms += [
            TermSpec(q_tilde[s], Q, 0.5, cls, f"qpc{'+' if s > 0 else '-'}"),
            TermSpec(Q, q_tilde[s].conj().T, 0.5, cls, f"qpc{'+' if s > 0 else '-'}"),
        ]
    # electron transfer rate through the contact, averaged over |a⟩ and |b⟩
    rate = p.eta * max(p.V, p.delta) * (p.T0**2 + (p.T0 + p.kappa) ** 2) / 2
    meta = {"model": "qubit_qpc", **asdict(p), "delta": p.delta, "rate_scale": rate}
    return assemble(terms, H, np.zeros((2, 2)), junction, meta)


# ---------------------------------------------------------- qubit + SET


@dataclass(frozen=True)
class SetParams:
    """Charge qubit read out by a single-electron transistor (SET).

    Basis ``{|0a⟩, |0b⟩, |1a⟩, |1b⟩}`` (SET charge, qubit state). ``eps`` is
    ``E_a − E_b``; an electron on the SET costs an extra ``U`` when the qubit
    is in ``|a⟩``.

    Model I: the SET level sits inside the bias window for ``|b⟩`` only; with
    the qubit in ``|a⟩`` an electron can leave to either lead but no electron
    can enter. Model II: the level is inside the window for both qubit states,
    with rates ``Γ_L = (1+ξ)Γ̄_L, Γ_L' = (1−ξ)Γ̄_L`` (``|b⟩``, ``|a⟩``) and
    likewise for the right lead with ``ζ``.
    """

    model: str = "I"
    eps: float = 0.0
    omega: float = 2.0
    U: float = 80.0
    gamma_l: float = 1.0
    gamma_r: float = 1.0
    xi: float = 0.0
    zeta: float = 0.0
    alpha: float = 0.5

    def __post_init__(self):
        if self.model not in ("I", "II"):
            raise ValueError("SET model must be 'I' or 'II'")
        if abs(self.xi) > 1 or abs(self.zeta) > 1:
            raise ValueError("|xi| and |zeta| must not exceed 1")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha


def _ket_bra(i: int, j: int, d: int = 4) -> np.ndarray:
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


def qubit_set(p: SetParams, junction: str = "right") -> GeneratorSet:
    """SET detector generator at zero temperature in the large-``U`` regime."""
    H = np.diag([p.eps, 0.0, p.eps + p.U, 0.0]).astype(complex)
    H[0, 1] = H[1, 0] = H[2, 3] = H[3, 2] = p.omega
    out_a, out_b = _ket_bra(0, 2), _ket_bra(1, 3)
    a = out_a + out_b
    if p.model == "I":
        fill = {"left": p.gamma_l * out_b}
        empty = {"left": p.gamma_l * out_a, "right": p.gamma_r * a}
        rate = p.gamma_l
    else:
        gl, glp = (1 + p.xi) * p.gamma_l, (1 - p.xi) * p.gamma_l
        gr, grp = (1 + p.zeta) * p.gamma_r, (1 - p.zeta) * p.gamma_r
        fill = {"left": glp * out_a + gl * out_b}
        empty = {"right": grp * out_a + gr * out_b}
        rate = p.gamma_l
    N = np.diag([0.0, 0.0, 1.0, 1.0]).astype(complex)
    # The rate equations are of Redfield type: coherences ρ12 and ρ34 exchange
    # weight although the populations they connect do not, so the stationary
    # state of model I dips slightly below zero (by less than 1e-3 for U ≫ Ω).
    meta = {"model": "qubit_set", **asdict(p), "rate_scale": rate, "completely_positive": False, "positivity_tol": 1e-2}
    return assemble(transport_terms(a, fill, empty, junction), H, N, junction, meta)


# ------------------------------------------------------------------ catalog

CATALOG = {
    "single_level": "spinless level between two wide-band leads (finite bias and temperature)",
    "ddab_cb": "Coulomb-blockaded double dot in an Aharonov-Bohm ring (large bias)",
    "majorana": "dot side-coupled to a Majorana (or regular) bound state (large bias)",
    "qubit_qpc": "charge qubit continuously measured by a point contact",
    "qubit_set": "charge qubit measured by a single-electron transistor (models I and II)",
}


def build(name: str, params: dict, junction: str = "right") -> GeneratorSet:
    """Build a catalog model from a flat parameter dictionary."""
    params = dict(params)
    if name == "single_level":
        left = LeadSpec(params.pop("mu_l", 1e3), params.pop("T_l", params.get("T", 0.0)), params.pop("gamma_l", 0.5))
        right = LeadSpec(params.pop("mu_r", -1e3), params.pop("T_r", params.get("T", 0.0)), params.pop("gamma_r", 0.5))
        params.pop("T", None)
        E0 = params.pop("E0", 0.0)
        _no_leftovers(name, params)
        return single_level(E0, left, right, junction)
    if name == "ddab_cb":
        if "delta" in params or "phi" in params:
            p = DdAbParams.from_flux(
                params.pop("gamma_l", 1.0), params.pop("gamma_r", 1.0), params.pop("delta", 1.0), params.pop("phi", 0.0)
            )
            _no_leftovers(name, params)
            return ddab_cb(p, junction)
        return ddab_cb(DdAbParams(**params), junction)
    if name == "majorana":
        return majorana(MajoranaParams(**params), junction)
    if name == "qubit_qpc":
        return qubit_qpc(QubitQpcParams(**params), junction)
    if name == "qubit_set":
        return qubit_set(SetParams(**params), junction)
    raise KeyError(f"unknown model {name!r}; known: {sorted(CATALOG)}")


def _no_leftovers(name: str, params: dict) -> None:
    if params:
        raise TypeError(f"{name}: unknown parameters {sorted(params)}")


def default_catalog(junction: str = "right") -> dict[str, GeneratorSet]:
    """One representative generator per model, used by the invariant suite."""
    return {
        "single_level": single_level(0.2, LeadSpec(1.0, 0.3, 0.4), LeadSpec(-0.5, 0.3, 0.6), junction),
        "ddab_cb": ddab_cb(DdAbParams.from_flux(1.0, 1.0, 1.0, 0.7), junction),
        "majorana": majorana(MajoranaParams(eps_m=0.3, lam=0.8, lam1=0.8, gamma_l=0.6, gamma_r=0.4), junction),
        "qubit_qpc": qubit_qpc(QubitQpcParams(eps=0.2, omega=0.5, T0=1.0, kappa=0.3, eta=1.0, V=2.0, T=0.5), junction),
        "qubit_set_I": qubit_set(SetParams("I", eps=0.0, omega=2.0, U=80.0, gamma_l=1.0, gamma_r=5.0), junction),
        "qubit_set_II": qubit_set(SetParams("II", omega=1.0, U=50.0, gamma_l=1.0, gamma_r=3.0, xi=0.9, zeta=0.9), junction),
    }


def model_names() -> Sequence[str]:
    return tuple(CATALOG)
