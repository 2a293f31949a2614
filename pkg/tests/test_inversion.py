import dataclasses

import numpy as np
import pytest

from diraccqed.coupling import build_mode_set
from diraccqed.errors import InversionAccuracyError
from diraccqed.laplace import estimate_asymptote, invert_c2, invert_laplace

from oracles import exact_c2, grouped_bath


def test_exponential_pair():
    a = 1e12
    t = np.linspace(0, 5 / a, 201)
    res = invert_laplace(lambda s: 1 / (s + a), t)
    assert np.max(np.abs(res.values - np.exp(-a * t))) <= 1e-6
    assert res.max_error <= 1e-6


def test_cosine_pair():
    w0 = 2e13
    t = np.linspace(0, 5 * 2 * np.pi / w0, 301)
    res = invert_laplace(lambda s: s / (s**2 + w0**2), t)
    assert np.max(np.abs(res.values - np.cos(w0 * t))) <= 1e-6


def test_damped_sine_pair_with_given_asymptote():
    g, w = 1e11, 1e12
    t = np.linspace(0, 30 / w, 151)
    F = lambda s: w / ((s + g) ** 2 + w**2)  # noqa: E731
    res = invert_laplace(F, t, asymptote=[0.0, w, -2 * g * w, w * (3 * g**2 - w**2)])
    np.testing.assert_allclose(res.values.real, np.exp(-g * t) * np.sin(w * t), atol=1e-6)


def test_linearity():
    t = np.linspace(0, 4e-12, 121)
    F = lambda s: 1 / (s + 1e12)  # noqa: E731
    G = lambda s: s / (s**2 + 4e24)  # noqa: E731
    combo = invert_laplace(lambda s: 2 * F(s) - 0.5j * G(s), t).values
    sep = 2 * invert_laplace(F, t).values - 0.5j * invert_laplace(G, t).values
    assert np.max(np.abs(combo - sep)) <= 2e-6


def test_sigma_runs_consistent_within_estimate():
    t = np.linspace(0, 5e-12, 51)
    F = lambda s: 1 / (s + 1e12)  # noqa: E731
    a = invert_laplace(F, t, check=True)
    b = invert_laplace(F, t, sigma=2 * a.sigma, check=False)
    assert np.max(np.abs(a.values - b.values)) <= max(a.max_error, 1e-12) * (1 + 1e-9)


def test_accuracy_error_when_truncated_too_early():
    t = np.linspace(0, 5e-12, 51)
    with pytest.raises(InversionAccuracyError):
        invert_laplace(lambda s: 1 / (s + 1e12), t, omega_max=1e11, asymptote=[0.0], tol=1e-8)


def test_zero_time_uses_initial_value():
    res = invert_laplace(lambda s: 0.3 / s + 1 / s**2, [0.0])
    assert res.values[0] == pytest.approx(0.3, rel=1e-6)


def test_grid_validation():
    with pytest.raises(ValueError):
        invert_laplace(lambda s: 1 / s, [1.0, 0.5])
    with pytest.raises(ValueError):
        invert_laplace(lambda s: 1 / s, [-1.0, 0.5])
    with pytest.raises(ValueError):
        invert_laplace(lambda s: 1 / s, [0.0, 1.0], sigma=-1.0)


def test_estimate_asymptote():
    c = estimate_asymptote(lambda s: 2 / (s + 3) + 1 / s**2, 1e4, 3)
    np.testing.assert_allclose(c, [2, -6 + 1, 18], rtol=1e-6)


def test_c2_free_evolution_and_ground_state(ref_params):
    t = np.linspace(0, 1e-13, 11)
    zero = dataclasses.replace(ref_params, chi21=0.0)
    np.testing.assert_allclose(invert_c2(zero, 0.8, t).values, 0.8, atol=1e-9)
    assert np.all(invert_c2(ref_params, 0.0, t).values == 0)


def test_c2_matches_exact_diagonalization(ref_config, ref_params):
    cfg = ref_config
    T = cfg.duration(ref_params)
    t = np.linspace(0, T, 400)
    res = invert_c2(ref_params, 1.0, t)
    ms = build_mode_set(cfg.dirac_cone(), cfg.emitter_spec(), cfg.system_spec(), cfg.lattice_spec(),
                        None, 400, 1)
    delta, g = grouped_bath(ms)
    ref = exact_c2(delta, g, 1.0, t)
    assert np.max(np.abs(res.values - ref)) <= 1e-4
    assert res.max_error <= 1e-4


def test_dispersive_regime_shift_against_exact_diagonalization(ref_config):
    """At a physical mode volume the emitter eigenstate barely mixes and shifts by sum_rule/Omega_D."""
    shifts = []
    for V in (1e-18, 1e-17):
        cfg = ref_config.with_overrides([f"system.V_m3={V}"])
        p = cfg.kernel_params()
        assert p.collective_rate() < 1e-2 * p.bandwidth
        ms = build_mode_set(cfg.dirac_cone(), cfg.emitter_spec(), cfg.system_spec(), cfg.lattice_spec(),
                            None, 200, 1)
        delta, g = grouped_bath(ms)
        t = np.array([0.0, 1e-9])
        # c2 at a short time fixes the phase rotation rate of the dominant eigenstate
        c2 = exact_c2(delta, g, 1.0, t)
        shifts.append(-np.angle(c2[1]) / t[1])
        assert abs(c2[1]) > 0.9999
        assert shifts[-1] == pytest.approx(p.dispersive_shift(), rel=1e-3)
    assert np.log(shifts[1] / shifts[0]) / np.log(10) == pytest.approx(-1.0, abs=0.01)
