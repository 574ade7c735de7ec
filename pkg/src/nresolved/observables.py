"""Stationary currents and finite-frequency noise spectra.

Junction spectra use MacDonald's formula. With ``𝒯⁻ = Jfwd − Jbwd`` and
``𝒯⁺ = Jfwd + Jbwd`` the symmetrized spectrum is::

    S(ω) = 2 Tr[𝒯⁺ ρ̄] + 4 Re Tr[𝒯⁻ y(ω)],   (−iω − Ltotal) y = 𝒯⁻ρ̄ − Ī ρ̄

The source is traceless, so the ``δ(ω)`` term generated by the mean current
never appears and every ``ω > 0`` is a regular solve. At ``ω = 0`` the same
equation is solved on the traceless subspace (group inverse).

The charge spectrum returned by :func:`charge_noise` already carries the
``ω²`` weight: it is the spectrum of ``dN̂/dt``, so charge conservation reads
``S_L + S_R − S_N = 2 S_LR``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import liouville as lv
from . import numkit
from .errors import DivergentNoise, GridMismatch, NoPeak, NoTransport, SingularMatrix, SingularResolvent

DIVERGENCE_GROWTH = 1e8


@dataclass(frozen=True)
class NoiseSpectrum:
    """Sampled spectrum ``S(ω)``.

    ``junction`` is one of ``left``, ``right``, ``charge``, ``circuit``,
    ``cross``; ``alpha`` is set for circuit spectra. ``current`` is the
    stationary current of the generating model (used by transport guards).
    """

    omega: np.ndarray
    values: np.ndarray
    junction: str
    alpha: float | None = None
    current: float | None = None
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float).copy()
        s = np.asarray(self.values, dtype=float).copy()
        if w.shape != s.shape or w.ndim != 1:
            raise ValueError("omega and values must be 1-D arrays of equal length")
        if not np.all(np.isfinite(s)):
            raise ValueError("spectrum has non-finite values")
        w.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "values", s)


def _vec_trace(v: np.ndarray, d: int) -> complex:
    return lv.trace_row(d) @ v


def _stationary(gen: lv.GeneratorSet, rho=None) -> np.ndarray:
    return lv.vectorize(lv.steady_state(gen) if rho is None else rho)


def stationary_current(gen: lv.GeneratorSet, rho=None) -> float:
    """``Ī = Tr[(Jfwd − Jbwd) ρ̄]`` at the generator's counting junction."""
    v = _stationary(gen, rho)
    return float(_vec_trace((gen.Jfwd - gen.Jbwd) @ v, gen.hilbert_dim).real)


def _resolvent_solve(L: np.ndarray, omega: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(−iω − L) y = rhs``."""
    a = -1j * omega * np.eye(L.shape[0]) - L
    try:
        return numkit.lu_solve(a, rhs)
    except SingularMatrix as exc:
        raise SingularResolvent(f"(−iω − L) singular at ω = {omega:.6g}: {exc}") from exc


def _macdonald(L, rho_v, t_minus, t_plus, d, omegas) -> np.ndarray:
    current = _vec_trace(t_minus @ rho_v, d).real
    source = t_minus @ rho_v - current * rho_v
    base = 2.0 * _vec_trace(t_plus @ rho_v, d).real
    out = np.empty(len(omegas))
    for i, w in enumerate(omegas):
        y = _resolvent_solve(L, w, source)
        out[i] = base + 4.0 * _vec_trace(t_minus @ y, d).real
    return out


def _omega_array(omega) -> tuple[np.ndarray, bool]:
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("finite-frequency spectra need ω > 0; use zero_freq_noise for ω = 0")
    return w, scalar


def macdonald_spectrum(gen: lv.GeneratorSet, omega, rho=None):
    """Symmetrized current noise at the generator's junction.

    Parameters
    ----------
    gen : GeneratorSet
    omega : float or array of float
        Frequencies, all ``> 0``.
    rho : array, optional
        Stationary state, if already known.

    Returns
    -------
    float or numpy.ndarray
        ``S(ω)`` with the shape of ``omega``.

    Raises
    ------
    SingularResolvent
        If ``iω`` hits an eigenvalue of ``Ltotal``.
    """
    w, scalar = _omega_array(omega)
    out = _macdonald(gen.Ltotal, _stationary(gen, rho), gen.Jfwd - gen.Jbwd, gen.Jfwd + gen.Jbwd, gen.hilbert_dim, w)
    return float(out[0]) if scalar else out


def _zero_freq(L, rho_v, t_minus, t_plus, d) -> float:
    current = _vec_trace(t_minus @ rho_v, d).real
    source = t_minus @ rho_v - current * rho_v
    y = numkit.constrained_solve(L, -source, lv.trace_row(d), 0.0)
    ns = np.linalg.norm(source)
    growth = np.linalg.norm(y) / ns if ns > 0 else 0.0
    if growth > DIVERGENCE_GROWTH:
        raise DivergentNoise(f"‖y‖/‖s‖ = {growth:.3e} exceeds {DIVERGENCE_GROWTH:.0e}", growth)
    return float(2.0 * _vec_trace(t_plus @ rho_v, d).real + 4.0 * _vec_trace(t_minus @ y, d).real)


def zero_freq_noise(gen: lv.GeneratorSet, rho=None) -> float:
    """``S(0)`` from the group-inverse solve ``Ltotal y = −s``, ``Tr y = 0``.

    Raises
    ------
    DivergentNoise
        If ``‖y‖ > 1e8 ‖s‖``; ``growth`` carries the measured ratio.
    """
    try:
        return _zero_freq(gen.Ltotal, _stationary(gen, rho), gen.Jfwd - gen.Jbwd, gen.Jfwd + gen.Jbwd, gen.hilbert_dim)
    except SingularMatrix as exc:
        raise DivergentNoise(f"zero-frequency solve is singular: {exc}", np.inf) from exc


def fano_zero_freq(gen: lv.GeneratorSet, rho=None) -> float:
    """Zero-frequency Fano factor ``S(0) / 2Ī``.

    Raises
    ------
    NoTransport
        If the stationary current vanishes.
    """
    rho = lv.steady_state(gen) if rho is None else rho
    current = stationary_current(gen, rho)
    if abs(current) < 1e-300:
        raise NoTransport("zero stationary current: Fano factor undefined")
    return zero_freq_noise(gen, rho) / (2.0 * current)


def charge_noise(gen: lv.GeneratorSet, omega, rho=None):
    """Spectrum of ``dN̂/dt``, ``2ω² Re Tr{N̂ [σ̃(ω) + σ̃(−ω)]}``.

    ``σ̃(ω) = −(iω + Ltotal)⁻¹ (N̂ − ⟨N̂⟩) ρ̄``; removing the mean from the
    source drops a term odd in ω that cancels in the sum. Returns 0 at ω = 0.
    """
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    d = gen.hilbert_dim
    rho = lv.steady_state(gen) if rho is None else rho
    rho_v = lv.vectorize(rho)
    N = gen.number_op
    mean = np.trace(N @ rho).real
    source = lv.vectorize(N @ rho) - mean * rho_v
    n_row = N.T.reshape(-1)  # n_row @ vec(X) = Tr(N X)
    L = gen.Ltotal
    out = np.zeros(len(w))
    for i, om in enumerate(w):
        if om == 0:
            continue
        acc = 0.0
        for s in (om, -om):
            # −(iω + L)σ = r  <=>  (−iω − L)σ = r
            sigma = _resolvent_solve(L, s, source)
            acc += (n_row @ sigma).real
        out[i] = 2.0 * om**2 * acc
    return float(out[0]) if scalar else out


def junction_spectrum(gen: lv.GeneratorSet, omegas, rho=None) -> NoiseSpectrum:
    """Sample :func:`macdonald_spectrum` into a :class:`NoiseSpectrum`."""
    rho = lv.steady_state(gen) if rho is None else rho
    w = np.asarray(omegas, dtype=float)
    return NoiseSpectrum(
        w, macdonald_spectrum(gen, w, rho), gen.junction, current=stationary_current(gen, rho), metadata=dict(gen.metadata)
    )


def charge_spectrum(gen: lv.GeneratorSet, omegas, rho=None) -> NoiseSpectrum:
    """Sample :func:`charge_noise` into a :class:`NoiseSpectrum`."""
    rho = lv.steady_state(gen) if rho is None else rho
    w = np.asarray(omegas, dtype=float)
    return NoiseSpectrum(
        w, charge_noise(gen, w, rho), "charge", current=stationary_current(gen, rho), metadata=dict(gen.metadata)
    )


def _common_grid(*specs: NoiseSpectrum) -> np.ndarray:
    w = specs[0].omega
    for s in specs[1:]:
        if s.omega.shape != w.shape or not np.array_equal(s.omega, w):
            raise GridMismatch("spectra are sampled on different ω grids")
    return w


def circuit_noise(S_L: NoiseSpectrum, S_R: NoiseSpectrum, S_N: NoiseSpectrum, alpha: float) -> NoiseSpectrum:
    """Circuit spectrum ``α S_L + β S_R − αβ S_N`` with ``β = 1 − α``.

    ``S_N`` is the ``dN̂/dt`` spectrum from :func:`charge_noise` (``ω²``
    included).
    """
    w = _common_grid(S_L, S_R, S_N)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    beta = 1.0 - alpha
    vals = alpha * S_L.values + beta * S_R.values - alpha * beta * S_N.values
    return NoiseSpectrum(w, vals, "circuit", alpha=alpha, current=S_R.current, metadata=dict(S_R.metadata))


def cross_spectrum(S_L: NoiseSpectrum, S_R: NoiseSpectrum, S_N: NoiseSpectrum) -> NoiseSpectrum:
    """Left-right cross correlation ``[S_L + S_R − S_N] / 2``.

    Raises
    ------
    NoTransport
        If the spectra come from a model without stationary current.
    """
    w = _common_grid(S_L, S_R, S_N)
    for s in (S_L, S_R):
        if s.current is not None and abs(s.current) < 1e-14:
            raise NoTransport("cross correlation needs a current-carrying model")
    return NoiseSpectrum(w, 0.5 * (S_L.values + S_R.values - S_N.values), "cross", current=S_R.current, metadata=dict(S_R.metadata))


def weighted_circuit_spectrum(
    gen_left: lv.GeneratorSet, gen_right: lv.GeneratorSet, alpha: float, omegas, cross_only: bool = False
) -> NoiseSpectrum:
    """Circuit (or cross) spectrum from a single weighted-count MacDonald solve.

    Counts ``α n_L + β n_R``; its jump superoperators are the junction parts
    weighted by ``α`` and ``β`` (squared in the diagonal term). With
    ``cross_only`` the same machinery returns ``S_LR`` directly. Independent
    of :func:`charge_noise`, so it validates the composition formulas.
    """
    if not np.allclose(gen_left.Ltotal, gen_right.Ltotal, atol=1e-12):
        raise ValueError("left and right generators describe different dynamics")
    beta = 1.0 - alpha
    rho = lv.steady_state(gen_right)
    rho_v = lv.vectorize(rho)
    d = gen_right.hilbert_dim
    tm_l, tp_l = gen_left.Jfwd - gen_left.Jbwd, gen_left.Jfwd + gen_left.Jbwd
    tm_r, tp_r = gen_right.Jfwd - gen_right.Jbwd, gen_right.Jfwd + gen_right.Jbwd
    w = np.asarray(omegas, dtype=float)
    if not cross_only:
        vals = _macdonald(gen_right.Ltotal, rho_v, alpha * tm_l + beta * tm_r, alpha**2 * tp_l + beta**2 * tp_r, d, w)
        return NoiseSpectrum(w, vals, "circuit", alpha=alpha, current=stationary_current(gen_right, rho))
    # S_LR = [S(n_L + n_R) − S_L − S_R] / 2, all from the weighted solver
    both = _macdonald(gen_right.Ltotal, rho_v, tm_l + tm_r, tp_l + tp_r, d, w)
    s_l = _macdonald(gen_right.Ltotal, rho_v, tm_l, tp_l, d, w)
    s_r = _macdonald(gen_right.Ltotal, rho_v, tm_r, tp_r, d, w)
    return NoiseSpectrum(w, 0.5 * (both - s_l - s_r), "cross", current=stationary_current(gen_right, rho))


def pedestal(spec: NoiseSpectrum, rule="asymptotic") -> float:
    """Background level: mean over the top decade of ω, or ``S`` at a frequency."""
    w, s = spec.omega, spec.values
    if rule == "asymptotic":
        top = w >= w.max() / 10.0
        return float(np.mean(s[top]))
    freq = float(rule)
    if not w.min() <= freq <= w.max():
        raise ValueError(f"pedestal frequency {freq} outside the sampled grid")
    return float(np.interp(freq, w, s))


def snr(spec: NoiseSpectrum, omega_peak_hint: float, pedestal_rule="asymptotic", window: float = 0.5) -> float:
    """Peak-to-pedestal ratio ``(S_peak − S_ped) / S_ped``.

    The peak is the largest interior local maximum of ``S`` with
    ``ω ∈ [(1−window)·hint, (1+window)·hint]``. ``pedestal_rule`` is
    ``"asymptotic"`` or a frequency at which the pedestal is read off.

    Raises
    ------
    NoPeak
        If no local maximum lies in the window (a flat spectrum gives 0).
    """
    w, s = spec.omega, spec.values
    scale = max(np.max(np.abs(s)), 1e-300)
    if np.ptp(s) <= 1e-12 * scale:
        return 0.0
    lo, hi = (1.0 - window) * omega_peak_hint, (1.0 + window) * omega_peak_hint
    idx = [i for i in range(1, len(s) - 1) if lo <= w[i] <= hi and s[i] >= s[i - 1] and s[i] >= s[i + 1] and s[i] > min(s[i - 1], s[i + 1])]
    if not idx:
        raise NoPeak(f"no local maximum of S(ω) in [{lo:.4g}, {hi:.4g}]")
    peak = max(s[i] for i in idx)
    ped = pedestal(spec, pedestal_rule)
    if ped <= 0:
        raise NoPeak("non-positive pedestal")
    return float((peak - ped) / ped)


def local_minimum(spec: NoiseSpectrum, lo: float, hi: float) -> float:
    """Frequency of the deepest interior local minimum of ``S`` in ``[lo, hi]``."""
    w, s = spec.omega, spec.values
    idx = [i for i in range(1, len(s) - 1) if lo <= w[i] <= hi and s[i] <= s[i - 1] and s[i] <= s[i + 1]]
    if not idx:
        raise NoPeak(f"no local minimum of S(ω) in [{lo:.4g}, {hi:.4g}]")
    i = min(idx, key=lambda j: s[j])
    # parabolic refinement through the three bracketing samples
    x, y = w[i - 1 : i + 2], s[i - 1 : i + 2]
    den = (x[0] - x[1]) * (x[0] - x[2]) * (x[1] - x[2])
    a = (x[2] * (y[1] - y[0]) + x[1] * (y[0] - y[2]) + x[0] * (y[2] - y[1])) / den
    b = (x[2] ** 2 * (y[0] - y[1]) + x[1] ** 2 * (y[2] - y[0]) + x[0] ** 2 * (y[1] - y[2])) / den
    return float(-b / (2 * a)) if a > 0 else float(w[i])
