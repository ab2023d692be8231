import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whitham_coalescence.boussinesq import (
    BoussinesqSetup,
    DispersionClass,
    FieldState,
    classify_dispersion,
    conserved_quantities,
    denormalize,
    fit_translation,
    linear_frequency_sq,
    make_state,
    measure_frequency,
    modal_amplitude,
    normalize,
    shift_field,
    simulate,
    solitary_wave,
    spectral_derivative,
)
from whitham_coalescence.errors import BlowUp, DegenerateCoefficient, NoSolitaryWave, UnstableStep


def test_normalize_examples():
    s = normalize(1, 1, 1, 1)
    assert (s.s1, s.s2, s.scale_t, s.scale_x, s.scale_u) == (1, 1, 1.0, 1.0, 1.0)
    s = normalize(1, -1, 2, 1)
    assert (s.s1, s.s2) == (-1, 1)
    assert (s.scale_t, s.scale_x, s.scale_u) == (1.0, 1.0, 0.5)
    assert s.classification is DispersionClass.HYPERBOLIC_ALL_K


@pytest.mark.parametrize("name,args", [("mu", (0, 1, 1, 1)), ("nu", (1, 0, 1, 1)),
                                       ("kappa", (1, 1, 0, 1)), ("K", (1, 1, 1, 0))])
def test_normalize_degenerate(name, args):
    with pytest.raises(DegenerateCoefficient) as exc:
        normalize(*args)
    assert exc.value.name == name


nonzero = st.floats(min_value=1e-3, max_value=1e3).flatmap(lambda x: st.sampled_from([x, -x]))


@settings(max_examples=100, deadline=None)
@given(mu=nonzero, nu=nonzero, kappa=nonzero, K=nonzero)
def test_normalize_roundtrip_and_normal_form(mu, nu, kappa, K):
    s = normalize(mu, nu, kappa, K)
    assert s.s1 == np.sign(mu * nu) and s.s2 == np.sign(mu * K)
    assert s.scale_t > 0 and s.scale_x > 0
    got = s.transformed_coefficients()
    np.testing.assert_allclose(got, (1, s.s1, 1, s.s2), rtol=1e-12)
    back = denormalize(s.s1, s.s2, s.scale_t, s.scale_x, s.scale_u, mu)
    np.testing.assert_allclose(back, (mu, nu, kappa, K), rtol=1e-12)


def test_classification_table():
    assert classify_dispersion(-1, 1).classification is DispersionClass.HYPERBOLIC_ALL_K
    v = classify_dispersion(-1, -1)
    assert v.classification is DispersionClass.FINITE_BAND_INSTABILITY and v.is_stable(0.5) and not v.is_stable(2)
    v = classify_dispersion(1, 1)
    assert v.classification is DispersionClass.CUTOFF_RESTABILIZED and not v.is_stable(0.5) and v.is_stable(2)
    v = classify_dispersion(1, -1)
    assert v.classification is DispersionClass.ALL_K_UNSTABLE and not v.is_stable(0.1) and not v.is_stable(5)
    ks = np.linspace(0.05, 3, 50)
    for s1, s2 in ((-1, 1), (-1, -1), (1, 1), (1, -1)):
        v = classify_dispersion(s1, s2)
        assert all((linear_frequency_sq(s1, s2, k) >= 0) == v.is_stable(k) for k in ks)


def test_solitary_wave_profile_and_residual():
    st_ = solitary_wave(-1, 1, 0.5, 80, 512)
    assert st_.u.max() == pytest.approx(2.25, rel=1e-12)
    xi = st_.grid - 40
    np.testing.assert_allclose(st_.u, 2.25 / np.cosh(math.sqrt(0.1875) * xi) ** 2, rtol=1e-12)
    # s2 u'' + (s1 + g^2) u + u^2/2 = 0
    upp = spectral_derivative(st_.u, 80, 2)
    assert np.max(np.abs(upp + (-1 + 0.25) * st_.u + 0.5 * st_.u**2)) < 1e-8
    np.testing.assert_allclose(st_.u_t, 0.5 * spectral_derivative(st_.u, 80, 1), atol=1e-9)


def test_no_solitary_wave():
    with pytest.raises(NoSolitaryWave):
        solitary_wave(1, 1, 0.5, 80, 512)


def test_grid_power_of_two():
    with pytest.raises(ValueError):
        FieldState(np.arange(100.0), np.zeros(100), np.zeros(100))


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_spectral_derivative_accuracy(order):
    L, M = 10.0, 128
    x = np.arange(M) * L / M
    k_max = np.pi * M / L
    # first derivatives to 1e-10; rounding grows like eps * k_max^order beyond that
    tol = 1e-10 if order == 1 else 1e-13 * k_max**order
    for m in range(1, M // 3):
        k = 2 * np.pi * m / L
        u = np.sin(k * x)
        exact = k**order * np.sin(k * x + order * np.pi / 2)
        assert np.max(np.abs(spectral_derivative(u, L, order) - exact)) < tol


def test_zero_state_stays_zero():
    init = make_state(20.0, 64, np.zeros(64))
    tr = simulate(BoussinesqSetup.normal(-1, 1), init, 0.01, 1.0)
    assert not np.any(tr.u) and not np.any(tr.u_t)
    assert conserved_quantities(tr.final) == (0.0, 0.0)


def test_unstable_step_rejected():
    init = make_state(20.0, 64, np.zeros(64))
    with pytest.raises(UnstableStep):
        simulate(BoussinesqSetup.normal(-1, 1), init, 1.0, 1.0)


def test_soliton_translates():
    L, M, g, T = 80.0, 512, 0.5, 20.0
    init = solitary_wave(-1, 1, g, L, M)
    tr = simulate(BoussinesqSetup.normal(-1, 1), init, 0.2 * (L / M) ** 2, T)
    exact = shift_field(init.u, -g * T, L)
    assert np.linalg.norm(tr.final.u - exact) / np.linalg.norm(exact) < 1e-4
    s = fit_translation(tr.final.u, np.fft.fft(init.u), L)
    assert -s / T == pytest.approx(g, rel=5e-3)
    flux = tr.diagnostics["flux_mean"]
    assert np.max(np.abs(flux - flux[0])) < 1e-8


def test_temporal_fourth_order():
    setup = BoussinesqSetup.normal(-1, 1)
    init = solitary_wave(-1, 1, 0.5, 40.0, 64)
    ref = simulate(setup, init, 0.0025, 2.0).final.u
    e1 = np.linalg.norm(simulate(setup, init, 0.04, 2.0).final.u - ref)
    e2 = np.linalg.norm(simulate(setup, init, 0.02, 2.0).final.u - ref)
    assert 12 < e1 / e2 < 20


def test_mass_affine_for_random_init():
    rng = np.random.default_rng(7)
    L, M = 40.0, 128
    x = np.arange(M) * L / M
    u = sum(0.05 * rng.normal() * np.cos(2 * np.pi * j * x / L + rng.uniform(0, 6)) for j in range(1, 6))
    ut = 0.01 + sum(0.05 * rng.normal() * np.sin(2 * np.pi * j * x / L) for j in range(1, 4))
    tr = simulate(BoussinesqSetup.normal(-1, 1), make_state(L, M, u, ut), 0.01, 5.0)
    t, mass, flux = tr.diagnostics["t"], tr.diagnostics["mass"], tr.diagnostics["flux_mean"]
    slope, icpt = np.polyfit(t, mass, 1)
    assert np.max(np.abs(mass - (slope * t + icpt))) < 1e-6
    assert slope == pytest.approx(flux[0], rel=1e-8)
    assert np.max(np.abs(flux - flux[0])) < 1e-8


@pytest.mark.parametrize("s1,s2,m", [(-1, 1, 8), (1, 1, 40), (-1, -1, 8)])
def test_linear_frequency(s1, s2, m):
    L, M = 40 * np.pi, 256
    k = 2 * np.pi * m / L
    w = math.sqrt(abs(linear_frequency_sq(s1, s2, k)))
    init = make_state(L, M, lambda x: 1e-6 * np.cos(k * x))
    filt = dict(filter="hard", filter_cutoff=1.0) if s2 < 0 else {}
    dt = min(0.2 * (L / M) ** 2, 2 * np.pi / w / 200)
    tr = simulate(BoussinesqSetup.normal(s1, s2), init, dt, 6 * 2 * np.pi / w, n_frames=1000, **filt)
    assert measure_frequency(tr.times, modal_amplitude(tr.u, m)) == pytest.approx(w, rel=1e-2)


def test_bad_case_blows_up_without_filter():
    init = make_state(40.0, 128, lambda x: 1e-6 * np.cos(2 * np.pi * 3 * x / 40))
    with pytest.raises(BlowUp) as exc:
        simulate(BoussinesqSetup.normal(-1, -1), init, 0.2 * (40 / 128) ** 2, 50.0)
    assert 0 < exc.value.time < 50
    assert exc.value.trajectory is not None


def test_setup_serialisation_roundtrip():
    s = normalize(0.3, -2.0, 1.5, 0.7)
    assert BoussinesqSetup.from_dict(s.to_dict()) == s
