from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nresolved import liouville as lv, models, observables as ob, oracles
from nresolved.errors import DivergentNoise, GridMismatch, NoPeak, NoTransport


def _single(gl=0.5, gr=0.5, **kw):
    return models.build("single_level", dict(gamma_l=gl, gamma_r=gr, **kw))


def test_current_examples():
    assert ob.stationary_current(_single(0.3, 0.9)) == pytest.approx(0.3 * 0.9 / 1.2, rel=1e-14)
    for name, gen in models.default_catalog("left").items():
        if name != "majorana":
            right = models.default_catalog("right")[name]
            assert ob.stationary_current(gen) == pytest.approx(ob.stationary_current(right), rel=1e-10)


def test_single_level_spectrum_value():
    assert ob.macdonald_spectrum(_single(), 1.0) == pytest.approx(0.375, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0), st.floats(1e-3, 50.0))
def test_single_level_spectrum_closed_form(gl, gr, w):
    gen = _single(gl, gr)
    i = ob.stationary_current(gen)
    assert ob.macdonald_spectrum(gen, w) == pytest.approx(oracles.single_level_noise_mkv(gl, gr, i, w), rel=1e-9)


def test_ddab_fano_and_low_frequency():
    gen = models.build("ddab_cb", dict(gamma_l=1.0, gamma_r=1.0, delta=1.0, phi=0.0))
    assert ob.fano_zero_freq(gen) == pytest.approx(13 / 9, rel=1e-12)
    i = ob.stationary_current(gen)
    assert ob.macdonald_spectrum(gen, 1e-6) / (2 * i) == pytest.approx(13 / 9, rel=1e-9)


def test_single_level_fano_half():
    assert ob.fano_zero_freq(_single()) == pytest.approx(0.5, abs=1e-14)


def test_majorana_fano_excess():
    lam, g0 = 0.7, 1.0
    p = lambda lam1: models.MajoranaParams(0.0, 1e-4, lam, lam1, g0, g0)  # noqa: E731
    diff = ob.fano_zero_freq(models.majorana(p(lam))) - ob.fano_zero_freq(models.majorana(p(0.0)))
    assert diff == pytest.approx(lam**2 / (g0**2 + 2 * lam**2), abs=1e-7)


def test_majorana_dip():
    gen = models.majorana(models.MajoranaParams(0.0, 0.01, 2.0, 2.0, 1.0, 1.0))
    dip = ob.local_minimum(ob.junction_spectrum(gen, np.linspace(0.1, 8, 400)), 2, 6)
    assert abs(dip - 4.0) <= 0.4


def test_zero_frequency_is_low_frequency_limit():
    for name, gen in models.default_catalog().items():
        rho = lv.steady_state(gen)
        s0 = ob.zero_freq_noise(gen, rho)
        # S(ω) is even in ω: a quadratic fit in ω² extrapolates to S(0)
        w = np.array([1, 2, 3]) * 1e-3 * gen.rate_scale
        coef = np.polyfit(w**2, ob.macdonald_spectrum(gen, w, rho), 2)
        assert coef[-1] == pytest.approx(s0, rel=1e-5), name


def test_left_right_spectra_meet_at_low_frequency():
    for name in ("single_level", "ddab_cb", "qubit_set_I", "qubit_set_II"):
        left, right = models.default_catalog("left")[name], models.default_catalog("right")[name]
        rho = lv.steady_state(right)
        w = 1e-4 * right.rate_scale
        assert ob.macdonald_spectrum(left, w, rho) == pytest.approx(ob.macdonald_spectrum(right, w, rho), rel=1e-6), name


def test_divergent_noise_reported():
    gen = models.build("ddab_cb", dict(gamma_l=1.0, gamma_r=1.0, delta=1e-5, phi=0.0))
    with pytest.raises(DivergentNoise) as info:
        ob.zero_freq_noise(gen)
    assert info.value.growth > 1e8


def test_frequency_guards():
    with pytest.raises(ValueError):
        ob.macdonald_spectrum(_single(), 0.0)
    with pytest.raises(ValueError):
        ob.macdonald_spectrum(_single(), [1.0, np.inf])


def test_charge_noise_conservation_identity():
    gl, gr = 0.4, 0.9
    w = np.geomspace(0.05, 10, 15)
    g_l, g_r = _single(gl, gr), _single(gl, gr)
    g_l = models.build("single_level", dict(gamma_l=gl, gamma_r=gr), "left")
    s_l, s_r = ob.junction_spectrum(g_l, w), ob.junction_spectrum(g_r, w)
    s_n = ob.charge_spectrum(g_r, w)
    cross = ob.weighted_circuit_spectrum(g_l, g_r, 0.5, w, cross_only=True)
    np.testing.assert_allclose(s_l.values + s_r.values - s_n.values, 2 * cross.values, rtol=1e-8, atol=1e-12)
    assert ob.charge_noise(g_r, 0.0) == 0.0


def test_charge_noise_vanishes_without_injection():
    gen = models.single_level(0.0, models.LeadSpec(1e3, 0.0, 1e-12), models.LeadSpec(-1e3, 0.0, 1.0))
    assert abs(ob.charge_noise(gen, 0.7)) < 1e-10


def test_circuit_and_cross_compositions():
    w = np.geomspace(0.1, 30, 40)
    p = dict(model="I", omega=2.0, U=80.0, gamma_l=1.0, gamma_r=5.0)
    g_l, g_r = models.build("qubit_set", p, "left"), models.build("qubit_set", p, "right")
    rho = lv.steady_state(g_r)
    s_l, s_r, s_n = ob.junction_spectrum(g_l, w, rho), ob.junction_spectrum(g_r, w, rho), ob.charge_spectrum(g_r, w, rho)
    np.testing.assert_array_equal(ob.circuit_noise(s_l, s_r, s_n, 1.0).values, s_l.values)
    np.testing.assert_array_equal(ob.circuit_noise(s_l, s_r, s_n, 0.0).values, s_r.values)
    for alpha in (0.25, 0.5, 0.8):
        direct = ob.weighted_circuit_spectrum(g_l, g_r, alpha, w)
        np.testing.assert_allclose(ob.circuit_noise(s_l, s_r, s_n, alpha).values, direct.values, rtol=1e-8)
    direct = ob.weighted_circuit_spectrum(g_l, g_r, 0.5, w, cross_only=True)
    np.testing.assert_allclose(ob.cross_spectrum(s_l, s_r, s_n).values, direct.values, rtol=1e-7, atol=1e-10)


def test_composition_guards():
    w = np.array([1.0, 2.0])
    s = ob.junction_spectrum(_single(), w)
    other = ob.junction_spectrum(_single(), np.array([1.0, 3.0]))
    with pytest.raises(GridMismatch):
        ob.circuit_noise(s, other, s, 0.5)
    with pytest.raises(ValueError):
        ob.circuit_noise(s, s, s, 1.5)
    dead = ob.NoiseSpectrum(w, np.ones(2), "left", current=0.0)
    with pytest.raises(NoTransport):
        ob.cross_spectrum(dead, dead, dead)
    with pytest.raises(ValueError):
        ob.NoiseSpectrum(w, np.array([1.0, np.nan]), "left")


def test_set_cross_pedestal_is_small():
    w = np.geomspace(0.05, 1e4, 600)
    p = dict(model="I", omega=2.0, U=80.0, gamma_l=1.0, gamma_r=10.0)
    g_l, g_r = models.build("qubit_set", p, "left"), models.build("qubit_set", p, "right")
    rho = lv.steady_state(g_r)
    s_l, s_r, s_n = ob.junction_spectrum(g_l, w, rho), ob.junction_spectrum(g_r, w, rho), ob.charge_spectrum(g_r, w, rho)
    cross = ob.cross_spectrum(s_l, s_r, s_n)
    assert abs(ob.pedestal(cross)) < 1e-2 * min(ob.pedestal(s_l), ob.pedestal(s_r))


def _qpc_snr(V, kappa=1e-3):
    gen = models.qubit_qpc(models.QubitQpcParams(eps=0.0, omega=0.5, T0=1.0, kappa=kappa, eta=2 * np.pi * 6.25, V=V, T=0.01))
    grid = np.concatenate([np.linspace(0.5, 1.5, 4001), np.geomspace(2, 1e4, 200)])
    return ob.snr(ob.junction_spectrum(gen, grid), 1.0)


def test_qpc_snr_bound_and_voltage_suppression():
    high = _qpc_snr(100.0)
    assert 0.98 * 4 <= high <= 4 * 1.02
    assert _qpc_snr(2.0) < high


def test_snr_flat_and_missing_peak():
    w = np.linspace(1, 10, 50)
    assert ob.snr(ob.NoiseSpectrum(w, np.full(50, 2.0), "left"), 5.0) == 0.0
    with pytest.raises(NoPeak):
        ob.snr(ob.NoiseSpectrum(w, w.copy(), "left"), 5.0)
    with pytest.raises(NoPeak):
        ob.local_minimum(ob.NoiseSpectrum(w, w.copy(), "left"), 2, 8)


def test_pedestal_rules():
    w = np.linspace(1, 100, 100)
    s = ob.NoiseSpectrum(w, 1 + 1 / w, "left")
    assert ob.pedestal(s) == pytest.approx(np.mean(1 + 1 / w[w >= 10]))
    assert ob.pedestal(s, 4.0) == pytest.approx(1.25)
    with pytest.raises(ValueError):
        ob.pedestal(s, 1000.0)


def test_local_minimum_refines_parabola():
    w = np.linspace(0, 4, 41)
    s = ob.NoiseSpectrum(w, (w - 2.03) ** 2 + 1, "left")
    assert ob.local_minimum(s, 1, 3) == pytest.approx(2.03, abs=1e-12)


def test_spectrum_is_immutable():
    s = ob.junction_spectrum(_single(), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        s.values[0] = 0.0
