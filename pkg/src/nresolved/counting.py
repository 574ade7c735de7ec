"""Full counting statistics and large deviations of the transferred charge.

Three routes to the cumulants of ``n`` (electrons counted at the junction):

* the n-resolved ladder ``ρ̇⁽ⁿ⁾ = L0 ρ⁽ⁿ⁾ + Jfwd ρ⁽ⁿ⁻¹⁾ + Jbwd ρ⁽ⁿ⁺¹⁾``,
  propagated exactly and reduced to ``P(n, t)``;
* finite differences of the CGF ``K(χ) = ln Tr exp(M(χ) t) ρ0``;
* exact moment equations for ``⟨n⟩`` and ``⟨n²⟩``.

Large deviations use the real tilt ``M(x) = L0 + e^{−x}Jfwd + e^{x}Jbwd``
with ``P(x, t) = Σ e^{−xn} P(n, t) ≈ e^{−tλ(x)}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import liouville as lv
from . import numkit
from .errors import DegenerateDominant, NoConvergence, StencilInstability, WindowOverflow

LADDER_BLOCKS = 30
WINDOW_CAP = 200_000
TAIL_MASS = 1e-15
STENCIL_HALVINGS = 4


@dataclass(frozen=True)
class CountDistribution:
    """``P(n, t)`` for ``n = n_min, …, n_min + len(P) − 1``."""

    t: float
    n_min: int
    P: np.ndarray

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.P) - 1

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)


@dataclass(frozen=True)
class CumulantRecord:
    t: float
    c1: float
    c2: float
    c3: float
    c4: float
    route: str

    @property
    def fano(self) -> float:
        return self.c2 / self.c1


@dataclass(frozen=True)
class LdSample:
    """``λ(x)``; finite-time samples also carry ``F_k(x, t)`` for k = 1..3."""

    x: float
    lam: float | None
    t: float | None = None
    F: tuple = ()
    degenerate: bool = False

    @property
    def fano(self) -> float:
        """Generalized Fano factor ``−F2/F1 = var_x(n)/⟨n⟩_x``."""
        return -self.F[1] / self.F[0]


# ------------------------------------------------------------------ ladder


def _step_kernel(gen: lv.GeneratorSet, dt: float, K: int) -> tuple[np.ndarray, int]:
    """Blocks ``Φ_k(dt)`` with ``ρ⁽ⁿ⁾(t+dt) = Σ_k Φ_k ρ⁽ⁿ⁻ᵏ⁾(t)``.

    Obtained from the exponential of a finite ladder of ``2K+1`` blocks (only
    ``K+1`` without backflow); returns the stack and the lowest ``k``.
    """
    D = gen.dim
    kb = K if gen.has_backflow else 0
    size = K + kb + 1
    big = np.zeros((size * D, size * D), dtype=complex)
    for i in range(size):
        big[i * D : (i + 1) * D, i * D : (i + 1) * D] = gen.L0
        if i + 1 < size:
            # forward jump raises n by one: block (i+1, i)
            big[(i + 1) * D : (i + 2) * D, i * D : (i + 1) * D] = gen.Jfwd
            big[i * D : (i + 1) * D, (i + 1) * D : (i + 2) * D] = gen.Jbwd
    prop = numkit.mat_exp(big, dt)
    c = kb  # column of the block seeded at n = 0
    blocks = np.stack([prop[r * D : (r + 1) * D, c * D : (c + 1) * D] for r in range(size)])
    return blocks, -kb


def evolve_ladder(
    gen: lv.GeneratorSet,
    rho0,
    t: float,
    window_cap: int = WINDOW_CAP,
    return_states: bool = False,
):
    """Propagate the n-resolved ladder from ``ρ⁽⁰⁾ = ρ0`` to time ``t``.

    The exact short-time kernel ``Φ_k(dt)`` is taken from the exponential of
    a truncated ladder whose edge blocks are checked to carry no weight; the
    window of ``n`` grows by the kernel width each step and is trimmed where
    the tails hold less than ``1e-15`` probability.

    Returns
    -------
    CountDistribution, or (CountDistribution, list of ρ⁽ⁿ⁾) with ``return_states``.

    Raises
    ------
    WindowOverflow
        If the window would exceed ``window_cap`` sites.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    D = gen.dim
    tr = lv.trace_row(gen.hilbert_dim)
    states = lv.vectorize(rho0)[None, :]
    n_min = 0
    if t > 0:
        phi, k0, steps = _kernel_for(gen, t)
        width = len(phi)
        # stacked kernel: row block j multiplies ρ⁽ⁿ⁻ᵏ⁰⁻ʲ⁾
        stack = np.concatenate([p.T for p in phi[::-1]], axis=0)
        for _ in range(steps):
            m = states.shape[0]
            padded = np.zeros((m + 2 * (width - 1), D), dtype=complex)
            padded[width - 1 : width - 1 + m] = states
            windows = np.lib.stride_tricks.sliding_window_view(padded, (width, D))[:, 0]
            states = windows.reshape(m + width - 1, width * D) @ stack
            n_min += k0
            states, shift = _trim(states, tr)
            n_min += shift
            if states.shape[0] > window_cap:
                raise WindowOverflow(f"count window {states.shape[0]} exceeds cap {window_cap}")
    P = (states @ tr).real
    dist = CountDistribution(float(t), int(n_min), P)
    if return_states:
        return dist, [lv.devectorize(v) for v in states]
    return dist


def _kernel_for(gen: lv.GeneratorSet, t: float):
    """Kernel blocks, lowest jump count and number of steps covering ``t``."""
    rate = max(np.linalg.norm(gen.Jfwd, 1) + np.linalg.norm(gen.Jbwd, 1), 1e-12)
    # about three jumps per step keeps the Poisson tail beyond the ladder edge
    # far below 1e-17
    steps = max(1, int(np.ceil(t * rate / 3.0)))
    for _ in range(8):
        phi, k0 = _step_kernel(gen, t / steps, LADDER_BLOCKS)
        edge = max(np.abs(phi[0]).max() if k0 < 0 else 0.0, np.abs(phi[-1]).max())
        if edge <= 1e-17:
            break
        steps *= 2
    else:
        raise NoConvergence(f"ladder kernel edge weight {edge:.1e} after step refinement")
    keep = [i for i in range(len(phi)) if np.abs(phi[i]).max() > 1e-300]
    lo, hi = keep[0], keep[-1]
    return phi[lo : hi + 1], k0 + lo, steps


def _trim(states: np.ndarray, tr: np.ndarray) -> tuple[np.ndarray, int]:
    mass = np.abs(states @ tr) + np.abs(states).max(axis=1) * 1e-3
    cum_lo = np.cumsum(mass)
    cum_hi = np.cumsum(mass[::-1])
    lo = int(np.searchsorted(cum_lo, TAIL_MASS / 2))
    hi = len(mass) - int(np.searchsorted(cum_hi, TAIL_MASS / 2))
    if hi <= lo:
        return states, 0
    return states[lo:hi], lo


def cumulants_from_distribution(dist: CountDistribution, route: str = "ladder") -> CumulantRecord:
    """Cumulants ``C1..C4`` from the central moments of ``P(n)``."""
    P = np.asarray(dist.P, dtype=float)
    total = P.sum()
    n = dist.n.astype(float)
    P = P / total
    c1 = float(P @ n)
    dn = n - c1
    m2, m3, m4 = (float(P @ dn**k) for k in (2, 3, 4))
    return CumulantRecord(dist.t, c1, m2, m3, m4 - 3 * m2**2, route)


# -------------------------------------------------------------------- CGF


def cgf(gen: lv.GeneratorSet, chi, t: float, rho0=None, shift: float = 0.0) -> np.ndarray:
    """``Tr exp(M(χ) t) ρ0 · e^{−iχ·shift}`` for each χ (the CGF is its logarithm).

    ``shift`` recenters the count (``n → n − shift``) so that the phase of the
    result winds slowly and can be unwrapped on a coarse χ grid.
    """
    rho_v = lv.vectorize(lv.steady_state(gen) if rho0 is None else rho0)
    tr = lv.trace_row(gen.hilbert_dim)
    chis = np.atleast_1d(np.asarray(chi, dtype=float))
    return np.array([tr @ numkit.mat_exp(lv.tilt_chi(gen, c), t) @ rho_v * np.exp(-1j * c * shift) for c in chis])


def _fornberg(order: int, offsets: np.ndarray) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at 0."""
    n = len(offsets)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, offsets[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, offsets[i]
        for j in range(i):
            c3 = offsets[i] - offsets[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


_STENCIL = np.arange(-4, 5, dtype=float)
_WEIGHTS = {k: _fornberg(k, _STENCIL) for k in range(1, 5)}
# error order of the 9-point central stencil for each derivative
_ORDER = {1: 8, 2: 8, 3: 6, 4: 6}


def _log_on_stencil(z: np.ndarray) -> np.ndarray:
    phase = np.angle(z)
    mid = len(z) // 2
    # unwrap outwards from χ = 0 where the phase is exactly 0
    phase[mid:] = np.unwrap(phase[mid:])
    phase[: mid + 1] = np.unwrap(phase[: mid + 1][::-1])[::-1]
    return np.log(np.abs(z)) + 1j * phase


def _derivs(gen, t, h, rho0, shift) -> np.ndarray:
    K = _log_on_stencil(cgf(gen, _STENCIL * h, t, rho0, shift))
    return np.array([(_WEIGHTS[k] @ K) / h**k for k in range(1, 5)])


def cgf_cumulants(gen: lv.GeneratorSet, t: float, order: int = 4, h: float | None = None, rho0=None) -> CumulantRecord:
    """Cumulants from central differences of ``K(χ)`` with Richardson extrapolation.

    ``C_k = (−i)^k K⁽ᵏ⁾(0)``. The count is recentred by ``Ī t`` before the
    logarithm is taken, and the step defaults to ``min(0.1, 0.5/√(Ī t))``,
    the width of the count distribution for Poisson-like statistics.

    Steps ``h, h/2, h/4`` give two Richardson estimates; the finer one is
    returned once they agree, halving further (up to four times) otherwise.

    Raises
    ------
    StencilInstability
        If the Richardson estimates still differ by more than ``1e-5``
        relative after the last halving.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if not 1 <= order <= 4:
        raise ValueError("order must be 1..4")
    rho0 = lv.steady_state(gen) if rho0 is None else rho0
    tr = lv.trace_row(gen.hilbert_dim)
    shift = float(np.round((tr @ ((gen.Jfwd - gen.Jbwd) @ lv.vectorize(rho0))).real * t))
    if h is None:
        h = min(0.1, 0.5 / np.sqrt(max(abs(shift), 1.0)))
    levels = [_derivs(gen, t, h, rho0, shift), _derivs(gen, t, h / 2, rho0, shift)]
    worst = ""
    for j in range(2, 2 + STENCIL_HALVINGS):
        levels.append(_derivs(gen, t, h / 2**j, rho0, shift))
        out, worst = _richardson(levels[-3:], order, shift)
        if not worst:
            return CumulantRecord(float(t), *out, route="tilted")
    raise StencilInstability(worst)


def _richardson(d, order, shift):
    out, worst = [], ""
    for k in range(1, 5):
        p = 2 ** _ORDER[k] - 1
        first = d[1][k - 1] + (d[1][k - 1] - d[0][k - 1]) / p
        second = d[2][k - 1] + (d[2][k - 1] - d[1][k - 1]) / p
        ck = ((-1j) ** k * second).real + (shift if k == 1 else 0.0)
        if k <= order:
            rel = abs(second - first) / max(abs(ck), 1e-300)
            if rel > 1e-5 and not worst:
                worst = f"C{k}: successive Richardson estimates differ by {rel:.2e} relative"
        out.append(ck if k <= order else float("nan"))
    return out, worst


def moment_cumulants(gen: lv.GeneratorSet, t: float, rho0=None) -> CumulantRecord:
    """Exact ``C1`` and ``C2`` from the first two moment equations.

    With ``N1 = Σ n ρ⁽ⁿ⁾`` and ``N2 = Σ n² ρ⁽ⁿ⁾``::

        Ṅ1 = L N1 + 𝒯⁻ ρ,    Ṅ2 = L N2 + 2 𝒯⁻ N1 + 𝒯⁺ ρ

    solved as one block-triangular exponential. ``C3``, ``C4`` are NaN.
    """
    D = gen.dim
    rho_v = lv.vectorize(lv.steady_state(gen) if rho0 is None else rho0)
    L = gen.Ltotal
    tm, tp = gen.Jfwd - gen.Jbwd, gen.Jfwd + gen.Jbwd
    big = np.zeros((3 * D, 3 * D), dtype=complex)
    for i in range(3):
        big[i * D : (i + 1) * D, i * D : (i + 1) * D] = L
    big[D : 2 * D, :D] = tm
    big[2 * D :, :D] = tp
    big[2 * D :, D : 2 * D] = 2 * tm
    seed = np.concatenate([rho_v, np.zeros(2 * D)])
    out = numkit.mat_exp(big, t) @ seed
    tr = lv.trace_row(gen.hilbert_dim)
    m1 = (tr @ out[D : 2 * D]).real
    m2 = (tr @ out[2 * D :]).real
    return CumulantRecord(float(t), float(m1), float(m2 - m1**2), float("nan"), float("nan"), "moments")


# ------------------------------------------------------- large deviations


def ld_lambda(gen: lv.GeneratorSet, x: float) -> float:
    """``λ(x) = −Re`` of the dominant eigenvalue of ``M(x)``.

    Raises
    ------
    DegenerateDominant
        If two eigenvalues compete for the maximal real part.
    """
    lam, _ = numkit.dominant_eig(lv.tilt_x(gen, x))
    return float(-lam.real)


def ld_curve(gen: lv.GeneratorSet, xs) -> list[LdSample]:
    """``λ(x)`` on a grid; degenerate points are returned flagged, not raised."""
    out = []
    for x in xs:
        try:
            out.append(LdSample(float(x), ld_lambda(gen, float(x))))
        except DegenerateDominant:
            out.append(LdSample(float(x), None, degenerate=True))
    return out


def ld_finite_time(gen: lv.GeneratorSet, x: float, t: float, k: int = 3, rho0=None) -> LdSample:
    """``F_j(x, t) = ∂ʲ_x [−ln P(x, t)]`` for ``j = 1..k`` at finite ``t``.

    ``ρ_j = ∂ʲ_x ρ(x, t)`` obey ``ρ̇_j = Σ_{i≤j} C(j, i) M⁽ʲ⁻ⁱ⁾ ρ_i`` with
    ``M⁽ᵐ⁾ = (−1)ᵐ e^{−x} Jfwd + e^{x} Jbwd`` for ``m ≥ 1``; the hierarchy is
    block lower-triangular and is propagated by one exponential.

    ``F`` holds ``(F1, F2, F3)[:k]`` and ``lam`` is ``−ln P(x, t) / t``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if not 1 <= k <= 3:
        raise ValueError("k must be 1..3")
    D = gen.dim
    rho_v = lv.vectorize(lv.steady_state(gen) if rho0 is None else rho0)
    M = [lv.tilt_x(gen, x)] + [(-1) ** m * np.exp(-x) * gen.Jfwd + np.exp(x) * gen.Jbwd for m in range(1, k + 1)]
    big = np.zeros(((k + 1) * D, (k + 1) * D), dtype=complex)
    for j in range(k + 1):
        for i in range(j + 1):
            big[j * D : (j + 1) * D, i * D : (i + 1) * D] = comb(j, i) * M[j - i]
    seed = np.concatenate([rho_v, np.zeros(k * D)])
    out = numkit.mat_exp(big, t) @ seed
    tr = lv.trace_row(gen.hilbert_dim)
    P = [(tr @ out[j * D : (j + 1) * D]).real for j in range(k + 1)]
    r1 = P[1] / P[0]
    F = [-r1]
    if k >= 2:
        r2 = P[2] / P[0]
        F.append(-(r2 - r1**2))
    if k >= 3:
        r3 = P[3] / P[0]
        F.append(-(r3 - 3 * r2 * r1 + 2 * r1**3))
    return LdSample(float(x), float(-np.log(P[0]) / t), float(t), tuple(float(f) for f in F))
