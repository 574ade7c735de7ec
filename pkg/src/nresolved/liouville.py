"""Jump-resolved Liouville-space generators.

Density matrices are vectorized row-major: ``vec(X) = X.reshape(-1)``. Under
this convention the map ``X ↦ A X B`` has the matrix ``kron(A, B.T)``.

A generator is split by what each term does to the electron count ``n`` at
the counting junction::

    dρ⁽ⁿ⁾/dt = L0 ρ⁽ⁿ⁾ + Jfwd ρ⁽ⁿ⁻¹⁾ + Jbwd ρ⁽ⁿ⁺¹⁾

so ``Ltotal = L0 + Jfwd + Jbwd`` propagates the unconditional state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from . import numkit
from .errors import DegenerateSteadyState, DimensionMismatch, NotPositive, SingularMatrix, TraceLeak

JUMP_CLASSES = ("neutral", "forward", "backward")
TRACE_LEAK_TOL = 1e-8
STEADY_RESIDUAL_TOL = 1e-9
POSITIVITY_TOL = 1e-6


def vectorize(rho) -> np.ndarray:
    """Row-major stacking of a square matrix into a column."""
    m = np.asarray(rho, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m.reshape(-1).copy()


def devectorize(vec) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(vec, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionMismatch(f"length {v.size} is not a perfect square")
    return v.reshape(d, d).copy()


def superop(left, right) -> np.ndarray:
    """Matrix of ``X ↦ left · X · right`` in the row-major convention."""
    a = np.asarray(left, dtype=complex)
    b = np.asarray(right, dtype=complex)
    return np.kron(a, b.T)


def commutator_superop(h) -> np.ndarray:
    """Matrix of ``X ↦ −i[h, X]``."""
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0])
    return -1j * (superop(h, eye) - superop(eye, h))


def trace_row(d: int) -> np.ndarray:
    """Row vector ``1†`` with ``trace_row(d) @ vec(X) = Tr X``."""
    return np.eye(d, dtype=complex).reshape(-1)


@dataclass(frozen=True)
class TermSpec:
    """One piece ``X ↦ coeff · left · X · right`` of a generator."""

    left: np.ndarray
    right: np.ndarray
    coeff: complex = 1.0
    jump_class: str = "neutral"
    tag: str = ""

    def __post_init__(self):
        if self.jump_class not in JUMP_CLASSES:
            raise ValueError(f"jump_class must be one of {JUMP_CLASSES}, got {self.jump_class!r}")

    def matrix(self) -> np.ndarray:
        return self.coeff * superop(self.left, self.right)


def lindblad_terms(op, rate: float, jump_class: str = "neutral", tag: str = "") -> list[TermSpec]:
    """Terms of ``rate · D[op]``; only the sandwich part carries ``jump_class``."""
    op = np.asarray(op, dtype=complex)
    eye = np.eye(op.shape[0])
    n = op.conj().T @ op
    return [
        TermSpec(op, op.conj().T, rate, jump_class, tag),
        TermSpec(n, eye, -0.5 * rate, "neutral", tag),
        TermSpec(eye, n, -0.5 * rate, "neutral", tag),
    ]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """Liouvillian split into neutral, forward-jump and backward-jump parts.

    Attributes
    ----------
    L0, Jfwd, Jbwd : numpy.ndarray
        ``d² × d²`` superoperators (read-only).
    number_op : numpy.ndarray
        System charge operator ``N̂`` (``d × d``).
    junction : str
        ``"left"`` or ``"right"``: where electrons are counted.
    metadata : Mapping
        Model name, parameters and the characteristic rate ``rate_scale``.
    """

    L0: np.ndarray
    Jfwd: np.ndarray
    Jbwd: np.ndarray
    number_op: np.ndarray
    hamiltonian: np.ndarray
    junction: str = "right"
    metadata: Mapping = field(default_factory=dict)
    terms: tuple = ()

    def __post_init__(self):
        for name in ("L0", "Jfwd", "Jbwd", "number_op", "hamiltonian"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))
        object.__setattr__(self, "_Ltotal", _readonly(self.L0 + self.Jfwd + self.Jbwd))

    @property
    def Ltotal(self) -> np.ndarray:
        return self._Ltotal

    @property
    def hilbert_dim(self) -> int:
        return self.number_op.shape[0]

    @property
    def dim(self) -> int:
        return self.L0.shape[0]

    @property
    def has_backflow(self) -> bool:
        return bool(np.any(self.Jbwd != 0))

    @property
    def rate_scale(self) -> float:
        return float(self.metadata.get("rate_scale", 1.0))


def trace_residual(L) -> float:
    """``max |1† L|``: zero for a trace-preserving generator."""
    L = np.asarray(L)
    d = int(round(np.sqrt(L.shape[0])))
    return float(np.max(np.abs(trace_row(d) @ L)))


def assemble(
    terms: Iterable[TermSpec],
    H,
    number_op,
    junction: str = "right",
    metadata: Mapping | None = None,
) -> GeneratorSet:
    """Collect terms and the Hamiltonian into a :class:`GeneratorSet`.

    Raises
    ------
    DimensionMismatch
        If any operator does not match the Hamiltonian's dimension.
    TraceLeak
        If ``max |1† Ltotal|`` exceeds ``1e-8``.
    """
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    if H.shape != (d, d):
        raise DimensionMismatch(f"Hamiltonian shape {H.shape}")
    if junction not in ("left", "right"):
        raise ValueError(f"junction must be 'left' or 'right', got {junction!r}")
    parts = {k: np.zeros((d * d, d * d), dtype=complex) for k in JUMP_CLASSES}
    parts["neutral"] += commutator_superop(H)
    terms = tuple(terms)
    for term in terms:
        if np.shape(term.left) != (d, d) or np.shape(term.right) != (d, d):
            raise DimensionMismatch(f"term {term.tag!r} has operator shapes {np.shape(term.left)}, {np.shape(term.right)}")
        parts[term.jump_class] += term.matrix()
    total = parts["neutral"] + parts["forward"] + parts["backward"]
    leak = trace_residual(total)
    if leak > TRACE_LEAK_TOL:
        raise TraceLeak(f"1†·Ltotal residual {leak:.3e} exceeds {TRACE_LEAK_TOL:.0e}")
    return GeneratorSet(
        L0=parts["neutral"],
        Jfwd=parts["forward"],
        Jbwd=parts["backward"],
        number_op=np.asarray(number_op, dtype=complex),
        hamiltonian=H,
        junction=junction,
        metadata=dict(metadata or {}),
        terms=terms,
    )


def tilt_x(gen: GeneratorSet, x: float) -> np.ndarray:
    """Large-deviation tilt ``M(x) = L0 + e^{−x} Jfwd + e^{x} Jbwd``."""
    if x == 0:
        return gen.Ltotal.copy()
    return gen.L0 + np.exp(-x) * gen.Jfwd + np.exp(x) * gen.Jbwd


def tilt_chi(gen: GeneratorSet, chi: complex) -> np.ndarray:
    """Counting-field tilt ``M(χ) = L0 + e^{iχ} Jfwd + e^{−iχ} Jbwd``."""
    if chi == 0:
        return gen.Ltotal.copy()
    return gen.L0 + np.exp(1j * chi) * gen.Jfwd + np.exp(-1j * chi) * gen.Jbwd


def apply(L, rho) -> np.ndarray:
    """Apply a superoperator to a density matrix."""
    return devectorize(np.asarray(L) @ vectorize(rho))


def steady_state(gen: GeneratorSet, positivity_tol: float | None = None) -> np.ndarray:
    """Unique stationary density matrix of ``gen.Ltotal``.

    Solved with the trace constraint ``Tr ρ = 1`` appended to ``Ltotal v = 0``
    and Hermitized afterwards.

    ``positivity_tol`` defaults to the generator's ``metadata["positivity_tol"]``
    if present, else ``1e-6``. Models whose equations are not completely
    positive (the SET detector forms) declare a looser floor there.

    Raises
    ------
    DegenerateSteadyState
        If the null space of ``Ltotal`` is not one-dimensional.
    NotPositive
        If the solution has an eigenvalue below ``−1e-6``.
    """
    d = gen.hilbert_dim
    L = gen.Ltotal
    try:
        v = numkit.constrained_solve(L, np.zeros(d * d), trace_row(d), 1.0)
    except SingularMatrix as exc:
        raise DegenerateSteadyState(f"stationary problem is singular: {exc}") from exc
    rho = devectorize(v)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    resid = np.linalg.norm(L @ vectorize(rho), np.inf)
    if resid > STEADY_RESIDUAL_TOL * max(1.0, np.linalg.norm(L, np.inf)):
        raise DegenerateSteadyState(f"stationary residual {resid:.3e}")
    if positivity_tol is None:
        positivity_tol = float(gen.metadata.get("positivity_tol", POSITIVITY_TOL))
    low = float(np.min(np.linalg.eigvalsh(rho)))
    if low < -positivity_tol:
        raise NotPositive(f"stationary state has eigenvalue {low:.3e}")
    return rho


def propagate(gen: GeneratorSet, rho0, t: float) -> np.ndarray:
    """Unconditional evolution ``exp(Ltotal t) ρ0``."""
    return devectorize(numkit.mat_exp(gen.Ltotal, t) @ vectorize(rho0))
