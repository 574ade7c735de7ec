"""Dense linear-algebra and quadrature kernels for small Liouville spaces.

Matrices are plain ``numpy`` complex arrays in row-major (C) order. The
factorization, exponential and Gauss-Kronrod kernels come from SciPy; this
module wraps them with the pivot, residual and convergence checks the rest of
the package relies on, so ill-conditioned generators fail loudly instead of
returning quiet garbage.
"""

from __future__ import annotations

import warnings
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy import integrate

from .errors import (
    DegenerateDominant,
    Inconsistent,
    MaxSubdivisions,
    NoConvergence,
    Overflow,
    SingularMatrix,
)

PIVOT_RTOL = 1e-13
RESIDUAL_RTOL = 1e-10
# mat_exp refuses arguments whose norm exceeds this; scaling and squaring is
# still accurate far beyond the 100 used in the error budget, but a norm this
# large signals a unit mistake in the caller.
MAT_EXP_NORM_BOUND = 1e7


def as_cmatrix(a, name: str = "A") -> np.ndarray:
    """Return ``a`` as a 2-D complex array, rejecting anything else."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def hermiticity_error(a) -> float:
    """Max-entry distance between ``a`` and its conjugate transpose."""
    m = as_cmatrix(a)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def _square(a, name="A") -> np.ndarray:
    m = as_cmatrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def lu_solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` by LU with partial pivoting.

    Parameters
    ----------
    a : (n, n) array_like
        Coefficient matrix.
    b : (n,) or (n, k) array_like
        Right-hand side(s).

    Returns
    -------
    numpy.ndarray
        Solution with the shape of ``b``.

    Raises
    ------
    SingularMatrix
        If a pivot falls below ``1e-13·‖a‖∞`` or the residual check
        ``‖ax − b‖ ≤ 1e-10 (‖a‖‖x‖ + ‖b‖)`` fails.
    """
    m = _square(a)
    rhs = np.asarray(b, dtype=complex)
    if rhs.shape[0] != m.shape[0]:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, matrix has {m.shape[0]}")
    norm = np.linalg.norm(m, np.inf)
    if norm == 0.0:
        raise SingularMatrix("zero matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(m, check_finite=True)
    pivot = float(np.min(np.abs(np.diag(lu))))
    if pivot <= PIVOT_RTOL * norm:
        raise SingularMatrix(f"pivot {pivot:.3e} below {PIVOT_RTOL:.0e}·‖A‖ = {PIVOT_RTOL * norm:.3e}")
    x = sla.lu_solve((lu, piv), rhs)
    resid = np.linalg.norm(m @ x - rhs, np.inf)
    bound = RESIDUAL_RTOL * (norm * np.linalg.norm(x, np.inf) + np.linalg.norm(rhs, np.inf))
    if not np.isfinite(resid) or resid > bound:
        raise SingularMatrix(f"residual {resid:.3e} exceeds {bound:.3e}")
    return x


def mat_exp(a, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(a·t)`` by scaling and squaring with a Padé kernel."""
    m = _square(a)
    arg = m * t
    norm = np.linalg.norm(arg, 1)
    if not np.isfinite(norm):
        raise Overflow("non-finite entries")
    if norm > MAT_EXP_NORM_BOUND:
        raise Overflow(f"‖A t‖₁ = {norm:.3e} exceeds {MAT_EXP_NORM_BOUND:.0e}")
    out = sla.expm(arg)
    if not np.all(np.isfinite(out)):
        raise Overflow("exponential overflowed")
    return out


def _ritz(a: np.ndarray, q: np.ndarray):
    h = q.conj().T @ a @ q
    vals, vecs = np.linalg.eig(h)
    order = np.argsort(-vals.real)
    return vals[order], vecs[:, order]


def dominant_eig(a, tol: float = 1e-10, max_iter: int = 80):
    """Eigenvalue of maximal real part and its right eigenvector.

    Orthogonal iteration on ``exp(a·τ)`` with ``τ`` doubled by repeated
    squaring until the leading Ritz pair has residual ``≤ tol·‖a‖``; the
    pair is then polished by two steps of shifted inverse iteration.

    Parameters
    ----------
    a : (n, n) array_like
        Matrix, typically a (tilted) Liouvillian.
    tol : float
        Relative residual target; also the minimal real-part gap accepted
        between the two leading eigenvalues.
    max_iter : int
        Maximal number of squarings.

    Returns
    -------
    (complex, numpy.ndarray)
        Eigenvalue and unit-norm right eigenvector.

    Raises
    ------
    DegenerateDominant
        If the second Ritz value has a real part within ``tol·‖a‖``.
    NoConvergence
        If the residual target is not met after ``max_iter`` squarings.
    """
    m = _square(a)
    n = m.shape[0]
    norm = np.linalg.norm(m, 1)
    if n == 1:
        return complex(m[0, 0]), np.ones(1, dtype=complex)
    if norm == 0.0:
        raise DegenerateDominant("zero matrix: every eigenvalue is 0")
    p = min(n, 4)
    rng = np.random.default_rng(12345)
    q, _ = np.linalg.qr(rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p)))
    step = mat_exp(m, 1.0 / norm)
    vals = vecs = None
    for _ in range(max_iter):
        q, _ = np.linalg.qr(step @ q)
        vals, vecs = _ritz(m, q)
        v = q @ vecs[:, 0]
        v /= np.linalg.norm(v)
        if np.linalg.norm(m @ v - vals[0] * v) <= tol * norm:
            break
        step = step @ step
        scale = np.linalg.norm(step, 1)
        if not np.isfinite(scale) or scale == 0.0:
            raise NoConvergence("propagator under/overflow during squaring")
        step /= scale
    else:
        raise NoConvergence(f"residual above {tol:.1e}·‖A‖ after {max_iter} squarings")
    if p > 1 and vals[0].real - vals[1].real <= tol * norm:
        raise DegenerateDominant(
            f"leading real parts {vals[0].real:.3e} and {vals[1].real:.3e} closer than {tol * norm:.1e}"
        )
    lam = vals[0]
    for _ in range(2):
        try:
            with warnings.catch_warnings(), np.errstate(divide="ignore", invalid="ignore"):
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                w = sla.solve(m - lam * np.eye(n), v)
        except (np.linalg.LinAlgError, ValueError):
            break
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            break
        v = w / nw
        lam = (v.conj() @ m @ v) / (v.conj() @ v)
    if np.linalg.norm(m @ v - lam * v) > tol * norm:
        raise NoConvergence("refined residual above tolerance")
    return complex(lam), v


def constrained_solve(a, b, c, gamma: complex = 1.0) -> np.ndarray:
    """Solve ``a x = b`` together with the linear constraint ``c·x = γ``.

    The constraint is appended through the bordered system
    ``[[a, c†], [c, 0]] [x, ζ] = [b, γ]``. For a singular ``a`` whose null
    vector has nonzero overlap with ``c`` this is nonsingular; a nonzero
    multiplier ``ζ`` means ``b`` is not in the range of ``a`` (or the
    constraint contradicts a nonsingular ``a``).

    Raises
    ------
    Inconsistent
        If no exact solution exists within tolerance.
    SingularMatrix
        If the bordered system is singular (constraint does not fix the
        null direction, or the null space is more than one-dimensional).
    """
    m = _square(a)
    n = m.shape[0]
    rhs = np.asarray(b, dtype=complex).reshape(n)
    row = np.asarray(c, dtype=complex).reshape(n)
    border = np.zeros((n + 1, n + 1), dtype=complex)
    border[:n, :n] = m
    border[:n, n] = row.conj()
    border[n, :n] = row
    sol = lu_solve(border, np.concatenate([rhs, [gamma]]))
    x, zeta = sol[:n], sol[n]
    scale = np.linalg.norm(m, np.inf) * np.linalg.norm(x, np.inf) + np.linalg.norm(rhs, np.inf) + abs(gamma)
    if abs(zeta) * np.linalg.norm(row, np.inf) > 1e-8 * scale:
        raise Inconsistent(f"constraint multiplier {abs(zeta):.3e} is not zero")
    return x


def quad_adaptive(
    f: Callable[[float], complex],
    a: float,
    b: float,
    tol: float = 1e-10,
    points: Sequence[float] | None = None,
    limit: int = 2000,
) -> complex:
    """Adaptive Gauss-Kronrod integral of a real-argument function on ``[a, b]``.

    Complex integrands are split into real and imaginary parts, each integrated
    to absolute error ``tol/2``. ``points`` lists interior breakpoints
    (resonances, Fermi edges).

    Raises
    ------
    MaxSubdivisions
        If QUADPACK stops with an error estimate above ``tol``.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("quad_adaptive needs finite limits; map the tails first")
    if a == b:
        return 0.0
    pts = None
    if points is not None:
        lo, hi = min(a, b), max(a, b)
        pts = sorted({float(p) for p in points if lo < p < hi}) or None
    # skip the imaginary pass for real integrands (three probes so that one
    # accidental zero of Im f does not hide it)
    probes = [complex(f(a + s * (b - a))) for s in (0.5, 0.31, 0.77)]
    parts = [np.real]
    if any(p.imag != 0.0 for p in probes):
        parts.append(np.imag)
    out = []
    for part in parts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err, info, *_ = integrate.quad(
                lambda x, part=part: float(part(f(x))),
                a,
                b,
                epsabs=tol / 2,
                epsrel=0.0,
                limit=limit,
                points=pts,
                full_output=1,
            )
        if err > tol / 2 and err > 1e-14 * abs(val):
            raise MaxSubdivisions(f"error estimate {err:.3e} above {tol / 2:.3e} ({info.get('last', '?')} intervals)")
        out.append(val)
    return complex(out[0], out[1] if len(out) > 1 else 0.0)


def quad_panels(
    f: Callable[[np.ndarray], np.ndarray],
    edges: Sequence[float],
    tol: float = 1e-10,
    order: int = 24,
    max_doublings: int = 12,
) -> complex:
    """Vectorized composite Gauss-Legendre integral over ``[edges[0], edges[-1]]``.

    Every interval between consecutive ``edges`` is cut into ``m`` equal
    panels carrying ``order`` nodes each; ``m`` doubles until two successive
    estimates differ by at most ``tol`` (absolute). ``f`` receives a 1-D
    array of nodes and must return values of the same length. This is the
    batch counterpart of :func:`quad_adaptive` for integrands that are cheap
    to evaluate on whole arrays.

    Raises
    ------
    MaxSubdivisions
        If the estimates have not settled after ``max_doublings`` doublings.
    """
    e = np.unique(np.asarray(edges, dtype=float))
    if e.size < 2:
        return 0.0
    if not np.all(np.isfinite(e)):
        raise ValueError("quad_panels needs finite edges; map the tails first")
    x0, w0 = np.polynomial.legendre.leggauss(order)
    widths = np.diff(e)
    prev = None
    for k in range(max_doublings + 1):
        m = 2**k
        # panel starts and half-widths, flattened over all intervals
        frac = np.arange(m) / m
        starts = (e[:-1, None] + widths[:, None] * frac[None, :]).ravel()
        half = np.repeat(widths / (2 * m), m)
        nodes = (starts + half)[:, None] + half[:, None] * x0[None, :]
        vals = np.asarray(f(nodes.ravel())).reshape(nodes.shape)
        est = complex(np.sum(vals * (half[:, None] * w0[None, :])))
        if not np.isfinite(est):
            raise MaxSubdivisions("non-finite integrand")
        change = np.inf if prev is None else abs(est - prev)
        if change <= tol:
            return est
        prev = est
    raise MaxSubdivisions(f"panel estimates still move by {change:.3e} after {m} panels per interval")
