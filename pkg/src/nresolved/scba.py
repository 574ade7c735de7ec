"""Stationary Green's-function quantities in the self-consistent Born scheme.

Lead ``α`` couples through a Lorentzian band ``Γ_α(ω) = Γ W² / ((ω−μ)² + W²)``
centred on its chemical potential; ``W = inf`` is the wide-band limit. The
retarded tunnelling self-energy of such a band is

    Σ0(ω) = Γ W / (2 (ω − μ + iW)),

and the single-particle propagator is ``φ(ω) = i [ω − h − Σ0(ω)]⁻¹`` so that
the spectral function is ``A = 2 Re φ``.

For the Anderson impurity the Fermi-weighted parts ``Γ⁺ = Γ n_F`` and
``Γ⁻ = Γ (1 − n_F)`` enter through principal values that have a closed digamma
form (:func:`lamb_shift`); no numerical principal value is taken here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

from . import numkit
from .errors import NoFixedPoint, ProportionalityViolated, SingularResolvent
from .models import fermi

PROPORTIONALITY_RTOL = 1e-10
FIXED_POINT_TOL = 1e-8
FIXED_POINT_DAMPING = 0.5
FIXED_POINT_CAP = 500
# a Fermi factor is below e^{-40} this many temperatures past its edge
FERMI_WINDOW = 40.0


@dataclass(frozen=True)
class LorentzianBand:
    """Lead coupling with a Lorentzian density of states.

    Parameters
    ----------
    gamma : float
        Peak coupling ``Γ``.
    W : float
        Half width; ``numpy.inf`` for the wide-band limit.
    mu : float
        Chemical potential, also the band centre.
    T : float
        Temperature (``k_B = 1``).
    """

    gamma: float
    W: float = np.inf
    mu: float = 0.0
    T: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.W > 0:
            raise ValueError(f"W must be positive, got {self.W}")
        if self.T < 0:
            raise ValueError(f"T must be non-negative, got {self.T}")

    @property
    def wide(self) -> bool:
        return bool(np.isinf(self.W))

    def occupation(self, omega):
        return fermi(omega, self.mu, self.T)


def gamma_of_omega(band: LorentzianBand, omega):
    """``Γ W² / ((ω − μ)² + W²)``; constant ``Γ`` in the wide-band limit."""
    omega = np.asarray(omega, dtype=float)
    if band.wide:
        return np.full_like(omega, band.gamma)
    xi = omega - band.mu
    return band.gamma * band.W**2 / (xi**2 + band.W**2)


def lamb_shift(band: LorentzianBand, omega, sign: int):
    """Closed-form principal value of the Fermi-weighted band, ``Λ^(±)(ω)``.

    With ``ξ = ω − μ`` and ``L = W² / (ξ² + W²)``::

        Λ^(±)(ω) = (Γ/π) L [Re Ψ(½ + iβξ/2π) − Ψ(½ + βW/2π) ∓ πξ/(2W)]

    where ``Ψ`` is the digamma function. It satisfies
    ``Λ^(+)(ω) = −2 P∫ dω′/2π Γ⁺(ω′)/(ω − ω′)`` and
    ``Λ^(−)(ω) = 2 P∫ dω′/2π Γ⁻(ω′)/(ω − ω′)``. At ``T = 0`` the digamma pair
    is replaced by its asymptote ``ln(|ξ| / W)``.

    Raises
    ------
    ValueError
        In the wide-band limit, where each part diverges logarithmically.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if band.wide:
        raise ValueError("Λ^(±) diverges with the bandwidth; give the band a finite W")
    xi = np.asarray(omega, dtype=float) - band.mu
    lor = band.W**2 / (xi**2 + band.W**2)
    if band.T == 0:
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(xi) / band.W)
    else:
        logs = _re_digamma_half(xi, band.T) - _re_digamma_half(band.W, band.T, real=True)
    return band.gamma / np.pi * lor * (logs - sign * np.pi * xi / (2 * band.W))


# beyond this argument ψ(½ + x) and ln x agree to 1/(24x²) < 1e-25
_DIGAMMA_ASYMPTOTE = 1e12


def _re_digamma_half(x, T: float, real: bool = False):
    """``Re Ψ(½ + i x/2πT)`` (or ``Ψ(½ + x/2πT)`` with ``real``) without forming ``1/T``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        y = x / (2 * np.pi * T)
    big = np.abs(y) > _DIGAMMA_ASYMPTOTE
    safe = np.where(big, 0.0, y)
    val = special.digamma(0.5 + safe) if real else special.digamma(0.5 + 1j * safe).real
    with np.errstate(divide="ignore"):
        far = np.log(np.abs(np.where(big, x, 1.0))) - np.log(2 * np.pi * T)
    return np.where(big, far, val)


def _bands(bands) -> tuple[LorentzianBand, ...]:
    if isinstance(bands, LorentzianBand):
        return (bands,)
    return tuple(bands)


def sigma0(bands, omega):
    """Retarded self-energy ``Σ_α ΓW / (2(ω − μ + iW))`` (``−iΓ/2`` if wide)."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape, dtype=complex)
    for b in _bands(bands):
        if b.wide:
            out += -0.5j * b.gamma
        else:
            out += 0.5 * b.gamma * b.W / (omega - b.mu + 1j * b.W)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------- matrix leads


@dataclass(frozen=True, eq=False)
class MatrixLead:
    """A lead whose coupling matrix is ``Γ_α(ω) = shape · Γ(ω)/Γ``.

    ``shape`` is Hermitian positive semidefinite with the peak couplings
    built in, e.g. ``Γ_L v v†`` for a lead that reaches every orbital with
    phases ``v``.
    """

    band: LorentzianBand
    shape: np.ndarray = field(default_factory=lambda: np.ones((1, 1)))

    def __post_init__(self):
        s = np.array(self.shape, dtype=complex, ndmin=2)
        if s.shape[0] != s.shape[1] or numkit.hermiticity_error(s) > 1e-12 * max(1.0, np.abs(s).max()):
            raise ValueError("lead shape must be a Hermitian square matrix")
        s.flags.writeable = False
        object.__setattr__(self, "shape", s)

    @classmethod
    def scalar(cls, band: LorentzianBand) -> "MatrixLead":
        return cls(band, np.array([[band.gamma]]))

    @classmethod
    def from_amplitudes(cls, band: LorentzianBand, amplitudes) -> "MatrixLead":
        """``shape = Γ v v†`` for tunnelling amplitudes ``v`` (phases only, |v_j| = 1 typical)."""
        v = np.asarray(amplitudes, dtype=complex)
        return cls(band, band.gamma * np.outer(v, v.conj()))

    def profile(self, omega):
        """``Γ(ω)/Γ``: the band's energy dependence, 1 at the centre."""
        return gamma_of_omega(self.band, omega) / self.band.gamma

    def coupling(self, omega: float) -> np.ndarray:
        return self.shape * float(self.profile(omega))

    def self_energy(self, omega: float) -> np.ndarray:
        return self.shape * (complex(sigma0(self.band, omega)) / self.band.gamma)


def phi_noninteracting(h, leads: Sequence[MatrixLead], omega: float) -> np.ndarray:
    """``φ(ω) = i [ω − h − Σ0(ω)]⁻¹`` for a quadratic Hamiltonian ``h``.

    Raises
    ------
    SingularResolvent
        If ``ω − h − Σ0`` is singular (no broadening at a resonance).
    """
    h = numkit.as_cmatrix(h, "h")
    if numkit.hermiticity_error(h) > 1e-12 * max(1.0, np.abs(h).max()):
        raise ValueError("h must be Hermitian")
    m = omega * np.eye(h.shape[0]) - h - sum(lead.self_energy(omega) for lead in leads)
    try:
        return 1j * numkit.lu_solve(m, np.eye(h.shape[0]))
    except Exception as exc:  # SingularMatrix from the pivot check
        raise SingularResolvent(f"ω − h − Σ0 is singular at ω = {omega}: {exc}") from exc


def _hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def proportionality(left: MatrixLead, right: MatrixLead) -> float:
    """Scalar ``c`` with ``left.shape = c · right.shape``.

    Raises
    ------
    ProportionalityViolated
        If the shapes are not proportional to ``1e-10`` relative.
    """
    a, b = left.shape, right.shape
    c = float(np.real(np.vdot(b, a) / np.vdot(b, b)))
    resid = np.linalg.norm(a - c * b) / max(np.linalg.norm(a), np.finfo(float).tiny)
    if c <= 0 or resid > PROPORTIONALITY_RTOL:
        raise ProportionalityViolated(f"Γ_L is not proportional to Γ_R (residual {resid:.2e}); use caroli_transmission")
    return c


def transmission(phi: np.ndarray, left: MatrixLead, right: MatrixLead, omega: float) -> float:
    """Compact ``T(ω) = Tr{Γ_L Γ_R (Γ_L + Γ_R)⁻¹ Re φ(ω)}`` for proportional couplings.

    ``Re φ`` is the Hermitian part. With ``Γ_L = c(ω) Γ_R`` the matrix
    prefactor is ``c/(1+c) Γ_R``, which also covers singular ``Γ_R``.
    """
    c = proportionality(left, right) * float(left.profile(omega) / right.profile(omega))
    return float(np.real(np.trace(right.coupling(omega) @ _hermitian_part(np.asarray(phi))))) * c / (1 + c)


def caroli_transmission(h, left: MatrixLead, right: MatrixLead, omega: float) -> float:
    """``½ Tr[Γ_L G Γ_R G†]`` with ``G = −iφ``; valid for any couplings.

    The factor ½ puts it on the same footing as :func:`transmission`, so
    both feed :func:`landauer_current` unchanged.
    """
    g = -1j * phi_noninteracting(h, (left, right), omega)
    return 0.5 * float(np.real(np.trace(left.coupling(omega) @ g @ right.coupling(omega) @ g.conj().T)))


def bias_window(left: LorentzianBand, right: LorentzianBand) -> tuple[float, float]:
    """Energy range outside which ``n_L − n_R`` is below ``e^{−40}``."""
    lo = min(left.mu - FERMI_WINDOW * left.T, right.mu - FERMI_WINDOW * right.T)
    hi = max(left.mu + FERMI_WINDOW * left.T, right.mu + FERMI_WINDOW * right.T)
    return lo, hi


def landauer_current(
    t_of_omega: Callable[[float], float],
    left: LorentzianBand,
    right: LorentzianBand,
    points: Iterable[float] = (),
    tol: float = 1e-11,
) -> float:
    """``Ī = 2 Re ∫ dω/2π [n_L(ω) − n_R(ω)] T(ω)`` by adaptive quadrature.

    The integral runs over the bias window only; ``points`` marks interior
    resonances for the quadrature.
    """
    lo, hi = bias_window(left, right)
    if lo == hi:
        return 0.0

    def integrand(w):
        return (float(left.occupation(w)) - float(right.occupation(w))) * t_of_omega(w)

    pts = list(points) + [left.mu, right.mu]
    val = numkit.quad_adaptive(integrand, lo, hi, tol=tol, points=pts)
    return 2.0 * val.real / (2 * np.pi)


def noninteracting_current(h, left: MatrixLead, right: MatrixLead, route: str = "compact", tol: float = 1e-11) -> float:
    """Exact stationary current of a quadratic Hamiltonian between two leads.

    ``route="compact"`` uses :func:`transmission` (proportional couplings
    only); ``route="caroli"`` uses :func:`caroli_transmission`.
    """
    h = numkit.as_cmatrix(h, "h")
    if route == "compact":
        proportionality(left, right)

        def tfun(w):
            return transmission(phi_noninteracting(h, (left, right), w), left, right, w)

    elif route == "caroli":

        def tfun(w):
            return caroli_transmission(h, left, right, w)

    else:
        raise ValueError(f"route must be 'compact' or 'caroli', got {route!r}")
    levels = np.linalg.eigvalsh(_hermitian_part(h))
    return landauer_current(tfun, left.band, right.band, points=levels, tol=tol)


# ------------------------------------------------------------ Anderson impurity

SPINS = ("up", "down")


@dataclass(frozen=True)
class AndersonParams:
    """Single spinful level with on-site repulsion between two leads.

    ``ε↑,↓ = ε0 ± zeeman``; both spins see the same ``left``/``right`` bands.
    """

    eps0: float
    U: float
    left: LorentzianBand
    right: LorentzianBand
    zeeman: float = 0.0

    def __post_init__(self):
        if self.U < 0:
            raise ValueError(f"U must be non-negative, got {self.U}")

    def level(self, spin: str) -> float:
        return self.eps0 + (self.zeeman if _spin_index(spin) == 0 else -self.zeeman)

    @property
    def double_energy(self) -> float:
        """``E_d = ε↑ + ε↓ + U``, the energy of the doubly occupied dot."""
        return 2 * self.eps0 + self.U

    @property
    def bands(self) -> tuple[LorentzianBand, LorentzianBand]:
        return (self.left, self.right)

    def features(self) -> list[float]:
        """Energies where the spectral function can vary sharply."""
        pts = [self.left.mu, self.right.mu]
        for s in SPINS:
            pts += [self.level(s), self.level(s) + self.U]
        return sorted(set(pts))


def _spin_index(spin: str) -> int:
    if spin not in SPINS:
        raise ValueError(f"spin must be one of {SPINS}, got {spin!r}")
    return SPINS.index(spin)


def _other(spin: str) -> str:
    return SPINS[1 - _spin_index(spin)]


def _weighted_gamma(band: LorentzianBand, x, sign: int):
    occ = band.occupation(x)
    return gamma_of_omega(band, x) * (occ if sign > 0 else 1.0 - occ)


def _pv_part(band: LorentzianBand, x, sign: int):
    """``P∫ dω′/2π Γ^(±)(ω′)/(x − ω′)`` from the digamma closed form."""
    lam = lamb_shift(band, x, sign)
    return -0.5 * lam if sign > 0 else 0.5 * lam


def sigma_pm_anderson(p: AndersonParams, omega, spin: str, sign: int):
    """Fermi-weighted self-energy ``Σ^(±)_μ(ω)`` of spin ``μ``.

    Sum of two retarded integrals of ``Γ^(±)`` with poles at
    ``a1 = ω − ε_μ̄ + ε_μ`` and ``a2 = E_d − ω``::

        Σ^(±) = Σ_α [P^±_α(a1) − P^±_α(a2)] − (i/2) [Γ^±_α(a1) + Γ^±_α(a2)]

    with ``P^±`` the closed-form principal values. Requires finite bands.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    omega = np.asarray(omega, dtype=float)
    a1 = omega - p.level(_other(spin)) + p.level(spin)
    a2 = p.double_energy - omega
    out = np.zeros(omega.shape, dtype=complex)
    for b in p.bands:
        out += _pv_part(b, a1, sign) - _pv_part(b, a2, sign)
        out -= 0.5j * (_weighted_gamma(b, a1, sign) + _weighted_gamma(b, a2, sign))
    return out if out.ndim else complex(out)


def _phi_branches(p: AndersonParams, omega, spin: str, mode: str, with_pm: bool):
    """The two pole terms of φ_μ without their occupation weights."""
    if mode not in ("kondo", "hf"):
        raise ValueError(f"mode must be 'kondo' or 'hf', got {mode!r}")
    omega = np.asarray(omega, dtype=float)
    eps = p.level(spin)
    s0 = sigma0(p.bands, omega)
    low = omega - eps - s0
    high = omega - eps - p.U - s0
    if mode == "kondo" and with_pm:
        sp = sigma_pm_anderson(p, omega, _other(spin), +1)
        sm = sigma_pm_anderson(p, omega, _other(spin), -1)
        s = sp + sm
        low = low + p.U * sp / (omega - eps - p.U - s0 - s)
        high = high - p.U * sm / (omega - eps - s0 - s)
    return 1j / low, 1j / high


def phi_anderson(p: AndersonParams, omega, n_other: float, spin: str = "up", mode: str = "hf", with_pm: bool = True):
    """Propagator ``φ_μ(ω)`` of spin ``μ`` given the other spin's occupation.

    ``mode="hf"`` is the two-pole mean-field form; ``mode="kondo"`` nests
    ``U Σ^(±)_μ̄`` in each pole. ``with_pm=False`` zeroes ``Σ^(±)`` so the
    Kondo form collapses onto the mean-field one.
    """
    if not 0.0 <= n_other <= 1.0:
        raise ValueError(f"occupation must lie in [0, 1], got {n_other}")
    low, high = _phi_branches(p, omega, spin, mode, with_pm)
    return (1.0 - n_other) * low + n_other * high


@dataclass(frozen=True)
class GreensSample:
    """Propagator samples of one spin on a frequency grid."""

    omega: np.ndarray
    phi: np.ndarray
    occupations: tuple[float, float]
    spin: str = "up"
    mode: str = "hf"

    @property
    def spectral(self) -> np.ndarray:
        return 2.0 * self.phi.real


def refined_grid(lo: float, hi: float, centers: Iterable[float], spacing: float, base: int = 401) -> np.ndarray:
    """Uniform grid on ``[lo, hi]`` plus patches of step ``spacing`` around ``centers``.

    Each patch spans ``±50·spacing``.
    """
    parts = [np.linspace(lo, hi, base)]
    for c in centers:
        if lo <= c <= hi:
            parts.append(np.clip(c + spacing * np.arange(-50, 51), lo, hi))
    return np.unique(np.concatenate(parts))


def spectral_sample(p: AndersonParams, omega, occupations, spin: str = "up", mode: str = "hf") -> GreensSample:
    n_other = occupations[1 - _spin_index(spin)]
    omega = np.asarray(omega, dtype=float)
    return GreensSample(omega, phi_anderson(p, omega, n_other, spin, mode), tuple(occupations), spin, mode)


def _line_edges(p: AndersonParams) -> tuple[np.ndarray, Callable]:
    """Map the real line to ``(−π/2, π/2)`` with ``ω = c + w tan θ``."""
    feats = np.array(p.features())
    c = float(np.mean(feats))
    w = max(float(np.ptp(feats)), sum(b.gamma for b in p.bands), 1e-3)
    edges = np.concatenate([[-np.pi / 2], np.arctan((feats - c) / w), [np.pi / 2]])

    def lift(f):
        def g(theta):
            omega = c + w * np.tan(theta)
            return f(omega) * w / np.cos(theta) ** 2

        return g

    return edges, lift


def _fill_weight(p: AndersonParams, omega):
    """``Σ_α Γ_α n_α / Σ_α Γ_α``: the lead-averaged filling at ``ω``."""
    num = sum(gamma_of_omega(b, omega) * b.occupation(omega) for b in p.bands)
    den = sum(gamma_of_omega(b, omega) for b in p.bands)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def _branch_integrals(p: AndersonParams, spin: str, mode: str, with_pm: bool, weight, tol: float):
    """``∫ dω/2π weight(ω)·2 Re(branch)`` for both pole terms of ``φ_μ``."""
    edges, lift = _line_edges(p)
    out = []
    for k in range(2):

        def f(omega, k=k):
            # the tan map reaches |ω| ~ 1e16 at the panel nodes nearest ±π/2
            with np.errstate(over="ignore", invalid="ignore"):
                val = weight(omega) * 2.0 * _phi_branches(p, omega, spin, mode, with_pm)[k].real
            return np.nan_to_num(val, nan=0.0, posinf=0.0, neginf=0.0)

        out.append(numkit.quad_panels(lift(f), edges, tol=tol).real / (2 * np.pi))
    return out


def spectral_weight(p: AndersonParams, n_other: float, spin: str = "up", mode: str = "hf", with_pm: bool = True, tol: float = 1e-9) -> float:
    """``∫ A_μ(ω) dω/2π`` over the whole real line (1 for a normalized φ)."""
    w0, w1 = _branch_integrals(p, spin, mode, with_pm, lambda w: np.ones_like(w), tol)
    return (1 - n_other) * w0 + n_other * w1


@dataclass(frozen=True)
class FixedPoint:
    occupations: tuple[float, float]
    iterations: int
    history: tuple[float, ...]


def occupations_fixed_point(
    p: AndersonParams,
    mode: str = "hf",
    with_pm: bool = True,
    start: tuple[float, float] = (0.5, 0.5),
    damping: float = FIXED_POINT_DAMPING,
    tol: float = FIXED_POINT_TOL,
    cap: int = FIXED_POINT_CAP,
) -> FixedPoint:
    """Self-consistent ``n_μ = ∫ dω/2π f̄(ω) A_μ(ω; n_μ̄)``.

    ``f̄`` is the coupling-weighted lead filling. The spectral function is
    affine in ``n_μ̄``, so the two branch integrals are computed once per
    spin and the damped iteration runs on scalars.

    Raises
    ------
    NoFixedPoint
        If the update still exceeds ``tol`` after ``cap`` iterations.
    """
    branches = {}
    for s in SPINS:
        if s == "down" and p.zeeman == 0:
            branches[s] = branches["up"]
            continue
        branches[s] = _branch_integrals(p, s, mode, with_pm, lambda w: _fill_weight(p, w), tol=tol / 10)
    n = np.array(start, dtype=float)
    history = []
    for it in range(1, cap + 1):
        target = np.array(
            [(1 - n[1]) * branches["up"][0] + n[1] * branches["up"][1], (1 - n[0]) * branches["down"][0] + n[0] * branches["down"][1]]
        )
        step = target - n
        n = n + (1 - damping) * step
        history.append(float(np.max(np.abs(step))))
        if history[-1] < tol:
            return FixedPoint((float(n[0]), float(n[1])), it, tuple(history))
    raise NoFixedPoint(f"occupations moved by {history[-1]:.2e} after {cap} iterations", history)


def anderson_transmission(p: AndersonParams, omega, occupations, mode: str = "hf", with_pm: bool = True):
    """Spin-summed ``T(ω) = Σ_μ Γ_LΓ_R/(Γ_L+Γ_R) Re φ_μ(ω)``."""
    omega = np.asarray(omega, dtype=float)
    gl, gr = gamma_of_omega(p.left, omega), gamma_of_omega(p.right, omega)
    pref = gl * gr / (gl + gr)
    total = np.zeros(omega.shape)
    for i, s in enumerate(SPINS):
        total += pref * phi_anderson(p, omega, occupations[1 - i], s, mode, with_pm).real
    return total


def anderson_current(p: AndersonParams, occupations, mode: str = "hf", with_pm: bool = True, tol: float = 1e-10) -> float:
    """``Ī = 2 ∫ dω/2π (n_L − n_R) T(ω)`` over the bias window."""
    lo, hi = bias_window(p.left, p.right)
    if lo == hi:
        return 0.0
    edges = [lo, hi] + [x for x in p.features() if lo < x < hi]

    def f(omega):
        diff = p.left.occupation(omega) - p.right.occupation(omega)
        return diff * anderson_transmission(p, omega, occupations, mode, with_pm)

    return 2.0 * numkit.quad_panels(f, edges, tol=tol).real / (2 * np.pi)


@dataclass(frozen=True)
class IvPoint:
    V: float
    current: float
    occupations: tuple[float, float]
    iterations: int


def symmetric_bias(p: AndersonParams, V: float) -> AndersonParams:
    """Copy of ``p`` with ``μ_L = V/2`` and ``μ_R = −V/2`` (band centres follow)."""
    from dataclasses import replace

    return replace(p, left=replace(p.left, mu=V / 2), right=replace(p.right, mu=-V / 2))


def iv_curve(p: AndersonParams, voltages, mode: str = "hf", with_pm: bool = True) -> list[IvPoint]:
    """Self-consistent current at each symmetric bias, warm-starting the occupations."""
    out = []
    start = (0.5, 0.5)
    for V in np.asarray(voltages, dtype=float):
        q = symmetric_bias(p, float(V))
        fp = occupations_fixed_point(q, mode, with_pm, start=start)
        out.append(IvPoint(float(V), anderson_current(q, fp.occupations, mode, with_pm), fp.occupations, fp.iterations))
        start = fp.occupations
    return out
