from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nresolved import liouville as lv, models, observables as ob, oracles


def test_single_level_examples():
    assert ob.stationary_current(models.build("single_level", dict(gamma_l=0.5, gamma_r=0.5))) == pytest.approx(0.25, abs=1e-15)
    eq = models.single_level(0.2, models.LeadSpec(0.4, 0.3, 0.5), models.LeadSpec(0.4, 0.3, 0.8))
    assert abs(ob.stationary_current(eq)) < 1e-15


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(0.01, 2.0), st.floats(-1.0, 1.0)
)
def test_single_level_rate_equation_current(gl, gr, mu_l, mu_r, T, e0):
    gen = models.build("single_level", dict(gamma_l=gl, gamma_r=gr, mu_l=mu_l, mu_r=mu_r, T=T, E0=e0))
    ref = gl * gr / (gl + gr) * (models.fermi(e0, mu_l, T) - models.fermi(e0, mu_r, T))
    assert ob.stationary_current(gen) == pytest.approx(ref, rel=1e-10, abs=1e-15)


def test_ddab_examples():
    def current(delta, phi, gl=1.0, gr=1.0):
        return ob.stationary_current(models.build("ddab_cb", dict(gamma_l=gl, gamma_r=gr, delta=delta, phi=phi)))

    assert current(1.3, 0.0, 0.7, 1.9) == pytest.approx(2 * 0.7 * 1.9 / (2 * 0.7 + 1.9), rel=1e-12)
    assert abs(current(0.0, np.pi)) < 1e-14
    assert current(1.0, np.pi) == pytest.approx(2 / 7, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2 * np.pi), st.floats(-3.0, 3.0), st.floats(0.05, 2.0))
def test_ddab_periodic_and_gauge_invariant(phi, shift, delta):
    base = models.DdAbParams.from_flux(0.8, 1.3, delta, phi)
    ref = ob.stationary_current(models.ddab_cb(base))
    periodic = models.DdAbParams.from_flux(0.8, 1.3, delta, phi + 2 * np.pi)
    shifted = models.DdAbParams(base.E1, base.E2, 0.8, 1.3, base.phi_1L + shift, 0.0, base.phi_2L + shift, 0.0)
    assert ob.stationary_current(models.ddab_cb(periodic)) == pytest.approx(ref, rel=1e-10)
    assert ob.stationary_current(models.ddab_cb(shifted)) == pytest.approx(ref, rel=1e-10)


def test_majorana_limits():
    weak = models.majorana(models.MajoranaParams(0.0, 0.3, 1e-3, 0.0, 0.4, 0.9))
    assert ob.fano_zero_freq(weak) == pytest.approx(oracles.single_level_fano(0.4, 0.9), rel=1e-12)
    regular = models.majorana(models.MajoranaParams(0.2, 0.3, 1.2, 0.0, 0.4, 0.9))
    assert ob.fano_zero_freq(regular) == pytest.approx(oracles.single_level_fano(0.4, 0.9), rel=1e-12)
    # εM → 0 approaches 1 − ½[1 + 2(λ/Γ0)²]⁻¹ = 5/6 with an εM² correction
    mzm = models.majorana(models.MajoranaParams(0.0, 1e-4, 1.0, 1.0, 1.0, 1.0))
    assert ob.fano_zero_freq(mzm) == pytest.approx(5 / 6, abs=1e-8)


def test_majorana_degenerate_when_a_mode_decouples():
    from nresolved.errors import DegenerateSteadyState

    # εM = 0 with λ1 = λ leaves one Majorana untouched; λ = λ1 = 0 leaves f untouched
    for p in (models.MajoranaParams(0.0, 0.0, 1.0, 1.0), models.MajoranaParams(0.0, 0.3, 0.0, 0.0)):
        with pytest.raises(DegenerateSteadyState):
            lv.steady_state(models.majorana(p))


def test_qpc_without_response():
    p = models.QubitQpcParams(eps=0.1, omega=0.5, T0=0.8, kappa=0.0, eta=2.0, V=3.0, T=0.4)
    gen = models.qubit_qpc(p)
    rho0 = np.array([[0.7, 0.2], [0.2, 0.3]], dtype=complex)
    # every qubit state is stationary here, so evaluate the current on an arbitrary one
    assert ob.stationary_current(gen, rho0) == pytest.approx(p.eta * p.T0**2 * p.V, rel=1e-12)
    free = lv.assemble([], gen.hamiltonian, np.zeros((2, 2)))
    t = 1.7
    np.testing.assert_allclose(lv.propagate(gen, rho0, t), lv.propagate(free, rho0, t), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-5.0, 5.0), st.floats(0.0, 4.0), st.floats(0.05, 3.0))
def test_qpc_detailed_balance(x, V, T):
    p = models.QubitQpcParams(V=V, T=T)
    ratio = models.qpc_spectral(x, +1, p) / models.qpc_spectral(-x, -1, p)
    assert ratio == pytest.approx(np.exp(-(x + V) / T), rel=1e-12)


def test_qpc_high_bias_rates_approach_zero_argument():
    for V in (10.0, 100.0, 1000.0):
        p = models.QubitQpcParams(omega=0.5, V=V, T=0.0)
        gaps = np.array([-p.delta, p.delta])
        rel = np.abs(models.qpc_spectral(gaps, -1, p) / models.qpc_spectral(0.0, -1, p) - 1)
        assert np.max(rel) <= p.delta / V * (1 + 1e-12)


def test_set_model_one_blocks_in_state_a():
    gen = models.build("qubit_set", dict(model="I", omega=0.0, gamma_l=1.0, gamma_r=2.0))
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[0, 0] = 1.0  # empty SET, qubit in |a⟩
    for t in (0.5, 5.0, 50.0):
        rho = lv.propagate(gen, rho0, t)
        assert abs(np.trace(lv.devectorize(gen.Jfwd @ lv.vectorize(rho)))) < 1e-14


def test_set_model_two_without_response_is_a_plain_level():
    gen = models.build("qubit_set", dict(model="II", omega=1.0, U=50.0, gamma_l=1.0, gamma_r=3.0))
    current = ob.stationary_current(gen)
    assert current == pytest.approx(0.75, rel=1e-12)
    w = np.geomspace(0.1, 20, 25)
    np.testing.assert_allclose(ob.macdonald_spectrum(gen, w), oracles.single_level_noise_mkv(1.0, 3.0, current, w), rtol=1e-10)


def test_builders_validate():
    with pytest.raises(KeyError):
        models.build("no_such_model", {})
    with pytest.raises(TypeError):
        models.build("single_level", dict(gamma=1.0))
    with pytest.raises(ValueError):
        models.SetParams(model="III")
    with pytest.raises(ValueError):
        models.SetParams(xi=1.5)
    with pytest.raises(ValueError):
        models.QubitQpcParams(eta=0.0)
    with pytest.raises(ValueError):
        models.LeadSpec(0.0, -1.0, 1.0)


def test_left_and_right_counting_agree_on_current():
    for name, gen in models.default_catalog("right").items():
        if name == "majorana":
            continue  # pairing with the wire exchanges charge with the condensate
        left = models.default_catalog("left")[name]
        assert ob.stationary_current(left) == pytest.approx(ob.stationary_current(gen), rel=1e-10), name


def test_catalog_names():
    assert set(models.model_names()) == set(models.CATALOG)
    for gen in models.default_catalog().values():
        assert lv.trace_residual(gen.Ltotal) < 1e-12


def test_majorana_pairing_breaks_current_conservation():
    p = models.MajoranaParams(0.0, 0.3, 0.8, 0.8, 0.6, 0.4)
    i_l = ob.stationary_current(models.majorana(p, "left"))
    i_r = ob.stationary_current(models.majorana(p, "right"))
    assert i_l > i_r
    regular = models.MajoranaParams(0.0, 0.3, 0.8, 0.0, 0.6, 0.4)
    i_l = ob.stationary_current(models.majorana(regular, "left"))
    assert i_l == pytest.approx(ob.stationary_current(models.majorana(regular, "right")), rel=1e-12)
