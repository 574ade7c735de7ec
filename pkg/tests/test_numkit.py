from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nresolved import numkit
from nresolved.errors import DegenerateDominant, Inconsistent, MaxSubdivisions, Overflow, SingularMatrix


def _random_system(seed: int, n: int):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + n * np.eye(n)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return a, x


def test_lu_solve_identity():
    b = np.array([1.0, -2j, 3.5, 0.25 + 1j])
    np.testing.assert_array_equal(numkit.lu_solve(np.eye(4), b), b)


def test_lu_solve_diagonal():
    x = numkit.lu_solve(np.diag([2.0, 3j]), np.array([2.0, 3j]))
    np.testing.assert_allclose(x, [1.0, 1.0], rtol=0, atol=1e-15)


def test_lu_solve_recovers_known_solution():
    a, x = _random_system(7, 16)
    np.testing.assert_allclose(numkit.lu_solve(a, a @ x), x, rtol=1e-10)


@settings(max_examples=1000, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=16))
def test_lu_solve_random_well_conditioned(seed, n):
    a, x = _random_system(seed, n)
    np.testing.assert_allclose(numkit.lu_solve(a, a @ x), x, rtol=1e-9, atol=1e-12)


def test_lu_solve_singular_raises():
    with pytest.raises(SingularMatrix):
        numkit.lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
    with pytest.raises(SingularMatrix):
        numkit.lu_solve(np.zeros((3, 3)), np.ones(3))


def test_lu_solve_shape_mismatch():
    with pytest.raises(ValueError):
        numkit.lu_solve(np.eye(3), np.ones(2))
    with pytest.raises(ValueError):
        numkit.lu_solve(np.ones((2, 3)), np.ones(2))


def test_mat_exp_examples():
    np.testing.assert_array_equal(numkit.mat_exp(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(numkit.mat_exp(np.diag([-1.0, -2.0])), np.diag(np.exp([-1.0, -2.0])), rtol=1e-14)
    np.testing.assert_allclose(numkit.mat_exp(np.array([[0, 1], [0, 0]]), 3.0), [[1, 3], [0, 1]], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=0, max_value=2**32 - 1),
    st.floats(min_value=0.0, max_value=3.0),
    st.floats(min_value=0.0, max_value=3.0),
)
def test_mat_exp_semigroup(seed, t1, t2):
    rng = np.random.default_rng(seed)
    n = 6
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a -= (np.max(np.linalg.eigvals(a).real) + 0.5) * np.eye(n)  # stable
    lhs = numkit.mat_exp(a, t1 + t2)
    rhs = numkit.mat_exp(a, t1) @ numkit.mat_exp(a, t2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * max(1.0, np.abs(lhs).max()))


def test_mat_exp_overflow():
    with pytest.raises(Overflow):
        numkit.mat_exp(np.array([[1e9]]), 1.0)
    with pytest.raises(Overflow):
        numkit.mat_exp(np.array([[np.nan]]))


def test_dominant_eig_diagonal():
    lam, v = numkit.dominant_eig(np.diag([-1.0, -3.0]))
    assert lam == pytest.approx(-1.0, abs=1e-12)
    assert abs(abs(v[0]) - 1) < 1e-10


def test_dominant_eig_nonnormal():
    a = np.array([[-1.0, 5.0, 0.0], [0.0, -2.0, 1.0], [0.3, 0.0, -4.0]])
    lam, v = numkit.dominant_eig(a)
    ref = max(np.linalg.eigvals(a), key=lambda z: z.real)
    assert lam == pytest.approx(ref, abs=1e-9)
    assert np.linalg.norm(a @ v - lam * v) < 1e-9


def test_dominant_eig_degenerate():
    with pytest.raises(DegenerateDominant):
        numkit.dominant_eig(np.diag([-1.0, -1.0, -3.0]))


def test_constrained_solve_null_vector():
    v = np.array([1.0, 2.0, -1.0]) / np.sqrt(6)
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(np.column_stack([v, rng.standard_normal((3, 2))]))
    a = q @ np.diag([0.0, -1.0, -2.5]) @ q.T
    u = q[:, 0]
    c = u / (u @ u)
    x = numkit.constrained_solve(a, np.zeros(3), c, 1.0)
    np.testing.assert_allclose(x, u, atol=1e-12)


def test_constrained_solve_two_state_rates():
    gl, gr = 0.3, 0.7
    rates = np.array([[-gl, gr], [gl, -gr]])
    p = numkit.constrained_solve(rates, np.zeros(2), np.ones(2), 1.0)
    np.testing.assert_allclose(p, [gr / (gl + gr), gl / (gl + gr)], atol=1e-14)


def test_constrained_solve_matches_lu_when_consistent():
    a, x = _random_system(11, 5)
    c = np.arange(1.0, 6.0)
    got = numkit.constrained_solve(a, a @ x, c, c @ x)
    np.testing.assert_allclose(got, numkit.lu_solve(a, a @ x), rtol=1e-10)


def test_constrained_solve_inconsistent():
    a, x = _random_system(11, 4)
    with pytest.raises(Inconsistent):
        numkit.constrained_solve(a, a @ x, np.ones(4), np.sum(x) + 1.0)


def test_constrained_solve_two_dim_null_space():
    with pytest.raises(SingularMatrix):
        numkit.constrained_solve(np.diag([0.0, 0.0, -1.0]), np.zeros(3), np.ones(3), 1.0)


def test_quad_adaptive_sine():
    assert numkit.quad_adaptive(np.sin, 0.0, np.pi).real == pytest.approx(2.0, abs=1e-10)


def test_quad_adaptive_lorentzian():
    g, W, mu = 0.7, 2.0, 0.3
    R = 1e4
    val = numkit.quad_adaptive(lambda w: g * W**2 / ((w - mu) ** 2 + W**2), mu - R, mu + R, tol=1e-9, points=[mu])
    exact = 2 * g * W * np.arctan(R / W)
    assert val.real == pytest.approx(exact, rel=1e-10)
    assert val.real == pytest.approx(np.pi * g * W, rel=1e-3)


def test_quad_adaptive_breit_wigner_window():
    gl, gr, e0, mu_l, mu_r = 0.3, 0.5, 0.1, 1.0, -0.4
    g = gl + gr
    val = numkit.quad_adaptive(lambda w: gl * gr / ((w - e0) ** 2 + g**2 / 4), mu_r, mu_l, points=[e0])
    exact = 2 * gl * gr / g * (np.arctan(2 * (mu_l - e0) / g) - np.arctan(2 * (mu_r - e0) / g))
    assert val.real == pytest.approx(exact, rel=1e-12)


def test_quad_adaptive_complex_and_empty():
    val = numkit.quad_adaptive(lambda w: np.exp(1j * w), 0.0, np.pi / 2)
    assert val == pytest.approx(1 + 1j, abs=1e-12)
    assert numkit.quad_adaptive(np.sin, 1.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        numkit.quad_adaptive(np.sin, 0.0, np.inf)


def test_quad_adaptive_reports_failure():
    with pytest.raises(MaxSubdivisions):
        numkit.quad_adaptive(lambda w: np.sin(1 / w) / w, 1e-6, 1.0, tol=1e-14, limit=5)


def test_quad_panels_matches_closed_forms():
    val = numkit.quad_panels(lambda w: np.exp(-(w**2)), [-8.0, 0.0, 8.0], tol=1e-13)
    assert val.real == pytest.approx(np.sqrt(np.pi), rel=1e-12)
    val = numkit.quad_panels(lambda w: 1 / (w**2 + 1e-4), [-1.0, -0.05, 0.05, 1.0], tol=1e-10)
    assert val.real == pytest.approx(2 * np.arctan(100.0) / 1e-2, rel=1e-10)


def test_quad_panels_gives_up():
    with pytest.raises(MaxSubdivisions):
        numkit.quad_panels(lambda w: np.sin(1 / w), [1e-8, 1.0], tol=1e-14, max_doublings=2)
