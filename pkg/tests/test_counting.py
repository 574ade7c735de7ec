from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from nresolved import counting, liouville as lv, models, observables as ob
from nresolved.errors import WindowOverflow


def _single(gl=0.5, gr=0.5, **kw):
    return models.build("single_level", dict(gamma_l=gl, gamma_r=gr, **kw))


def test_ladder_at_time_zero():
    gen = _single()
    dist = counting.evolve_ladder(gen, lv.steady_state(gen), 0.0)
    assert dist.n_min == 0
    np.testing.assert_array_equal(dist.P, [1.0])


def test_fast_injection_gives_poisson_counts():
    # corrections to the Poisson cumulants scale as gr/gl
    gl, gr, t = 1e4, 1.0, 20.0
    gen = _single(gl, gr)
    rec = counting.cumulants_from_distribution(counting.evolve_ladder(gen, lv.steady_state(gen), t))
    for c in (rec.c1, rec.c2, rec.c3):
        assert c == pytest.approx(gr * t, rel=2e-3)


def test_cumulants_of_synthetic_distributions():
    mu = 7.5
    n = np.arange(0, 80)
    rec = counting.cumulants_from_distribution(counting.CountDistribution(1.0, 0, stats.poisson.pmf(n, mu)))
    assert rec.c1 == pytest.approx(mu, rel=1e-12)
    assert rec.c2 == pytest.approx(mu, rel=1e-10)
    assert rec.c3 == pytest.approx(mu, rel=1e-8)
    assert rec.c4 == pytest.approx(mu, rel=1e-7)
    rec = counting.cumulants_from_distribution(counting.CountDistribution(1.0, 4, np.array([1.0])))
    assert (rec.c1, rec.c2, rec.c3, rec.c4) == (4.0, 0.0, 0.0, 0.0)


def test_ladder_mean_tracks_current():
    gen = models.default_catalog()["single_level"]
    t = 100.0 / gen.rate_scale
    rho = lv.steady_state(gen)
    rec = counting.cumulants_from_distribution(counting.evolve_ladder(gen, rho, t))
    assert rec.c1 / t == pytest.approx(ob.stationary_current(gen, rho), rel=1e-6)


def test_cgf_first_cumulant_and_periodicity():
    gen = models.default_catalog()["ddab_cb"]
    rho = lv.steady_state(gen)
    t = 50.0
    rec = counting.cgf_cumulants(gen, t, order=1, rho0=rho)
    assert rec.c1 == pytest.approx(ob.stationary_current(gen, rho) * t, rel=1e-7)
    assert np.isnan(rec.c2)
    z = counting.cgf(gen, [0.4, 0.4 + 2 * np.pi], 3.0, rho)
    assert z[0] == pytest.approx(z[1], rel=1e-10)


def test_fano_offset_decays_as_inverse_time():
    # starting from the steady state, C2(t) = F·Ī·t + b + (exponentially small),
    # so t·(C2/C1 − F) settles to a constant
    for name, gen in models.default_catalog().items():
        rho = lv.steady_state(gen)
        fano = ob.fano_zero_freq(gen, rho)
        offsets = []
        # the slowest model (weakly measured qubit) needs ~300/rate to shed its transient
        for t in (300.0 / gen.rate_scale, 600.0 / gen.rate_scale):
            rec = counting.moment_cumulants(gen, t, rho)
            offsets.append(t * (rec.c2 / rec.c1 - fano))
        assert offsets[1] == pytest.approx(offsets[0], rel=1e-4, abs=1e-9), name
        t1, t2 = 300.0 / gen.rate_scale, 600.0 / gen.rate_scale
        r1, r2 = counting.moment_cumulants(gen, t1, rho), counting.moment_cumulants(gen, t2, rho)
        assert (r2.c2 - r1.c2) / (r2.c1 - r1.c1) == pytest.approx(fano, rel=1e-3), name


def test_single_level_long_time_fano_half():
    gen = _single()
    rho = lv.steady_state(gen)
    a = counting.cumulants_from_distribution(counting.evolve_ladder(gen, rho, 200.0))
    b = counting.cumulants_from_distribution(counting.evolve_ladder(gen, rho, 400.0))
    assert (b.c2 - a.c2) / (b.c1 - a.c1) == pytest.approx(0.5, rel=1e-8)


def test_three_routes_agree():
    for name, gen in models.default_catalog().items():
        t = 200.0 / gen.rate_scale
        rho = lv.steady_state(gen)
        ladder = counting.cumulants_from_distribution(counting.evolve_ladder(gen, rho, t))
        tilted = counting.cgf_cumulants(gen, t, rho0=rho)
        moments = counting.moment_cumulants(gen, t, rho)
        for k in ("c1", "c2"):
            assert getattr(tilted, k) == pytest.approx(getattr(ladder, k), rel=1e-6), name
            assert getattr(moments, k) == pytest.approx(getattr(ladder, k), rel=1e-9), name
        for k in ("c3", "c4"):
            assert getattr(tilted, k) == pytest.approx(getattr(ladder, k), rel=1e-5), name


def test_ladder_marginalizes_to_unconditional_evolution():
    for gen in models.default_catalog().values():
        rho0 = np.eye(gen.hilbert_dim) / gen.hilbert_dim
        t = 5.0 / gen.rate_scale
        dist, states = counting.evolve_ladder(gen, rho0, t, return_states=True)
        assert np.max(np.abs(sum(states) - lv.propagate(gen, rho0, t))) <= 1e-9
        assert dist.P.min() >= -1e-12
        assert dist.P.sum() == pytest.approx(1.0, abs=1e-9)


def test_negative_counts_need_backflow():
    cold = _single(0.4, 0.6, mu_l=1.0, mu_r=-1.0, T=0.0, E0=0.0)
    dist = counting.evolve_ladder(cold, lv.steady_state(cold), 30.0)
    assert dist.n_min >= 0
    warm = _single(0.4, 0.6, mu_l=0.3, mu_r=-0.3, T=0.5, E0=0.0)
    assert warm.has_backflow
    dist = counting.evolve_ladder(warm, lv.steady_state(warm), 30.0)
    assert dist.n_min < 0
    assert dist.P[dist.n < 0].sum() > 1e-6


def test_window_cap():
    gen = _single(5.0, 5.0)
    with pytest.raises(WindowOverflow):
        counting.evolve_ladder(gen, lv.steady_state(gen), 100.0, window_cap=10)


def test_large_deviation_basics():
    gen = models.default_catalog()["single_level"]
    current = ob.stationary_current(gen)
    assert abs(counting.ld_lambda(gen, 0.0)) <= 1e-12
    h = 1e-5
    slope = (counting.ld_lambda(gen, h) - counting.ld_lambda(gen, -h)) / (2 * h)
    assert slope == pytest.approx(current, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.0, 1.0))
def test_lambda_below_linear_bound(x):
    gen = models.default_catalog()["single_level"]
    assert counting.ld_lambda(gen, x) <= x * ob.stationary_current(gen) + 1e-12


def test_lambda_is_concave_and_smooth():
    gen = models.default_catalog()["single_level"]
    xs = np.linspace(-1, 1, 41)
    lam = np.array([s.lam for s in counting.ld_curve(gen, xs)])
    assert np.all(np.diff(lam, 2) <= 1e-12)
    assert np.max(np.abs(np.diff(lam, 3))) < 1e-3


def test_finite_time_large_deviation():
    gen = models.default_catalog()["ddab_cb"]
    rho = lv.steady_state(gen)
    current = ob.stationary_current(gen, rho)
    t = 500.0 / gen.rate_scale
    s = counting.ld_finite_time(gen, 0.0, t, rho0=rho)
    assert s.F[0] == pytest.approx(current * t, rel=1e-6)
    a = counting.ld_finite_time(gen, 0.0, t, k=2, rho0=rho)
    b = counting.ld_finite_time(gen, 0.0, 2 * t, k=2, rho0=rho)
    assert (b.F[1] - a.F[1]) / (b.F[0] - a.F[0]) == pytest.approx(-ob.fano_zero_freq(gen, rho), rel=1e-6)
    assert s.fano == pytest.approx(ob.fano_zero_freq(gen, rho), rel=1e-2)
    for x in (-0.5, 0.5):
        assert counting.ld_finite_time(gen, x, t, k=1, rho0=rho).lam == pytest.approx(counting.ld_lambda(gen, x), rel=1e-2)


def test_argument_guards():
    gen = _single()
    with pytest.raises(ValueError):
        counting.evolve_ladder(gen, lv.steady_state(gen), -1.0)
    with pytest.raises(ValueError):
        counting.cgf_cumulants(gen, 0.0)
    with pytest.raises(ValueError):
        counting.cgf_cumulants(gen, 1.0, order=5)
    with pytest.raises(ValueError):
        counting.ld_finite_time(gen, 0.1, 1.0, k=4)
