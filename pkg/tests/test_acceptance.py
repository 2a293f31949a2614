"""Acceptance suite: one PASS/FAIL line per criterion.

Lines are printed as each check runs and repeated in the terminal summary,
so they show up under plain ``pytest -v`` as well as ``pytest -s``.
"""
import json
import time

import mpmath
import numpy as np
import pytest
from scipy.signal import find_peaks

from diraccqed.bands import fit_dirac_cone, solve_supercell_bands
from diraccqed.cli import main
from diraccqed.coupling import ModeSet, build_mode_set
from diraccqed.laplace import invert_c2, invert_laplace, kernel_lower, kernel_total, kernel_upper
from diraccqed.ode import InitialState, evolve, oscillation_frequency

from oracles import charpoly_eigvals, exact_c2, grouped_bath, kernel_radial_mp
from test_bands import random_model

REPORT = []


def report(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    REPORT.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def reference_run(ref_config, ref_params):
    """Both engines on the reference configuration, same time grid."""
    cfg = ref_config
    T = cfg.duration(ref_params)
    start = time.perf_counter()
    ms = build_mode_set(cfg.dirac_cone(), cfg.emitter_spec(), cfg.system_spec(), cfg.lattice_spec(),
                        cfg.profile(), cfg.bath.n_radial, cfg.bath.n_azimuthal)
    traj = evolve(cfg.initial_state(), ms, T, tolerance=cfg.run.tolerance, samples=cfg.run.samples)
    t_ode = time.perf_counter() - start
    lap = invert_c2(ref_params, cfg.initial_state().c2, traj.t, tol=cfg.run.inversion_tol)
    runtime = time.perf_counter() - start
    return {"cfg": cfg, "modes": ms, "traj": traj, "lap": lap, "runtime": runtime, "t_ode": t_ode}


# -- 1 ----------------------------------------------------------------------


def test_c1_engine_equivalence(reference_run):
    traj, lap = reference_run["traj"], reference_run["lap"]
    assert reference_run["cfg"].bath.n_radial == 200 and reference_run["cfg"].bath.n_azimuthal == 64
    x = traj.c2.real
    dev = float(np.max(np.abs(x - lap.values.real)))
    rep = oscillation_frequency(traj.t, x)
    omega = rep.zero_crossing_rad_s
    cycles = omega * traj.t[-1] / (2 * np.pi)
    # envelope of |Re c2| over the first three exchange cycles
    window = traj.t <= 3 * 2 * np.pi / omega
    idx, _ = find_peaks(np.abs(x[window]))
    env = np.concatenate([[abs(x[0])], np.abs(x[window][idx])])
    loss = 1 - env[-1] / env[0]
    ok = (dev <= 0.02 and cycles >= 3 and loss <= 0.20 and reference_run["runtime"] <= 600)
    report(1, ok, f"max|dRe c2| = {dev:.3e} (tol 0.02), cycles in window = {cycles:.2f} (>= 3), "
                  f"amplitude loss over 3 cycles = {100 * loss:.2f}% (<= 20%), "
                  f"runtime = {reference_run['runtime']:.1f} s (<= 600 s), "
                  f"omega = {omega:.5e} rad/s, spectrum peak agreement = {rep.agreement:.2e}")
    assert ok


# -- 2 ----------------------------------------------------------------------


def test_c2_kernel_correctness(ref_params):
    p = ref_params
    rng = np.random.default_rng(20)
    mag = p.bandwidth * 10 ** rng.uniform(-2, 2, 50)
    s_all = mag * np.exp(1j * rng.uniform(-0.49 * np.pi, 0.49 * np.pi, 50))
    worst = 0.0
    with mpmath.workdps(30):
        for s in s_all:
            for band, fn in ((1, kernel_lower), (2, kernel_upper)):
                ref = kernel_radial_mp(s, p.chi21, p.omega_D, p.alpha, p.delta_kappa, band)
                worst = max(worst, abs(fn(s, p) - ref) / abs(ref))
            ref = (kernel_radial_mp(s, p.chi21, p.omega_D, p.alpha, p.delta_kappa, 1)
                   + kernel_radial_mp(s, p.chi21, p.omega_D, p.alpha, p.delta_kappa, 2))
            worst = max(worst, abs(kernel_total(s, p) - ref) / abs(ref))
    split = kernel_total(s_all, p, combined=False)
    joint = kernel_total(s_all, p)
    ident = float(np.max(np.abs(split - joint) / np.abs(joint)))
    ok = worst <= 1e-8 and ident <= 1e-10
    report(2, ok, f"closed form vs quadrature max rel = {worst:.2e} (tol 1e-8) over 50 s, |s| in "
                  f"[{mag.min():.2e}, {mag.max():.2e}]; lower+upper vs combined = {ident:.2e} (tol 1e-10)")
    assert ok


# -- 3 ----------------------------------------------------------------------


def _discrete_kernel(ms, s):
    return np.sum(ms.coupling_sq / (s + 1j * ms.delta))


def test_c3_continuum_limit(ref_config, ref_params):
    cfg = ref_config
    p = ref_params
    args = (cfg.dirac_cone(), cfg.emitter_spec(), cfg.system_spec(), cfg.lattice_spec(), cfg.profile())
    # spectrally resolved probe points: Re s comparable to the mode spacing and above
    probes = np.array([0.1, 0.5, 2.0]) * p.bandwidth + 1j * np.array([0.3, -1.0, 2.0]) * p.bandwidth
    exact = kernel_total(probes, p)
    errs = []
    for nr in (50, 100, 200, 400):
        ms = build_mode_set(*args, nr, 8)
        errs.append(max(abs(_discrete_kernel(ms, s) - K) / abs(K) for s, K in zip(probes, exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    fine = build_mode_set(*args, 400, 128)
    dev = max(abs(_discrete_kernel(fine, s) - K) / abs(K) for s, K in zip(probes, exact))
    ok = bool(np.all(orders >= 1.8)) and dev <= 5e-3
    report(3, ok, f"observed orders {np.array2string(orders, precision=3)} (>= 1.8); "
                  f"deviation at 400x128 = {dev:.2e} (tol 5e-3) at Re s >= 0.1 alpha*dkappa")
    # informational: a probe far below the radial mode spacing is not resolved by any fixed grid
    s0 = 1e9 + 1e12j
    dev0 = abs(_discrete_kernel(fine, s0) - kernel_total(s0, p)) / abs(kernel_total(s0, p))
    spacing = p.bandwidth / 400
    print(f"INFO criterion 3: s = 1e9+1e12i probe deviation at 400x128 = {dev0:.2e}; "
          f"Re s = 1e9 is below the radial detuning spacing {spacing:.2e} rad/s")
    REPORT.append(f"INFO criterion 3: s = 1e9+1e12i (unresolved, Re s << spacing {spacing:.1e}) "
                  f"deviation = {dev0:.2e}")
    assert ok


# -- 4 ----------------------------------------------------------------------


def test_c4_norm_conservation(reference_run):
    traj = reference_run["traj"]
    init = reference_run["cfg"].initial_state()
    c1_dev = float(np.max(np.abs(traj.c1 - init.c1)))
    ok = traj.norm_drift <= 1e-6 and c1_dev <= 1e-14 * (1 + abs(init.c1))
    report(4, ok, f"norm drift = {traj.norm_drift:.2e} (tol 1e-6), max|c1 - c1(0)| = {c1_dev:.1e} (tol 1e-14)")
    assert ok


# -- 5 ----------------------------------------------------------------------


def test_c5_single_mode_oracle(reference_run):
    # one resonant mode carrying the reference collective coupling
    g = float(np.sqrt(reference_run["modes"].sum_rule()))
    ms = ModeSet(np.array([0.0]), np.array([0.0]), np.array([1]), np.array([1.0]),
                 np.array([0.0]), np.array([g], dtype=complex), np.array([1.0]))
    T = 5 * 2 * np.pi / g
    traj = evolve(InitialState(np.pi / 2), ms, T, samples=2001)
    err = float(np.max(np.abs(np.abs(traj.c2) - np.abs(np.cos(g * traj.t)))))
    ok = err <= 1e-6
    report(5, ok, f"max | |c2| - |cos(g t)| | = {err:.2e} over 5 periods, g = {g:.4e} rad/s (tol 1e-6)")
    assert ok


# -- 6 ----------------------------------------------------------------------


def test_c6_inversion_calibration():
    a = 1e12
    t1 = np.linspace(0, 5 / a, 201)
    e1 = float(np.max(np.abs(invert_laplace(lambda s: 1 / (s + a), t1).values - np.exp(-a * t1))))
    w0 = 2e13
    t2 = np.linspace(0, 5 * 2 * np.pi / w0, 301)
    e2 = float(np.max(np.abs(invert_laplace(lambda s: s / (s**2 + w0**2), t2).values - np.cos(w0 * t2))))
    ok = e1 <= 1e-6 and e2 <= 1e-6
    report(6, ok, f"1/(s+a) -> exp(-at): {e1:.2e}; s/(s^2+w0^2) -> cos(w0 t): {e2:.2e} (tol 1e-6)")
    assert ok


# -- 7 ----------------------------------------------------------------------


def test_c7_mode_volume_scaling(tmp_path):
    values = [f"{v:.6g}" for v in np.geomspace(1e-26, 1e-25, 5)]
    out = tmp_path / "sweep"
    code = main(["sweep", "--param", "V", "--values", *values, "--engine", "ode", "--out", str(out)])
    man = json.loads((out / "manifest.json").read_text())
    fit = man["results"]["sweep"]
    exp = fit["exponent"]
    ok = (code == 0 and fit["n_valid"] == len(values) and fit["strictly_decreasing"]
          and exp is not None and abs(exp + 0.5) <= 0.05)
    report(7, ok, f"V in [1e-26, 1e-25] m^3, {fit['n_valid']} points, strictly decreasing = "
                  f"{fit['strictly_decreasing']}, fitted exponent = {exp:.4f} (target -0.5 +- 0.05)")
    assert ok


def test_c7_info_physical_volume_regime(ref_config):
    """At physical mode volumes the emitter is dispersively shifted; frequency goes as 1/V."""
    shifts, predicted = [], []
    Vs = (1e-18, 1e-17)
    for V in Vs:
        cfg = ref_config.with_overrides([f"system.V_m3={V}"])
        ms = build_mode_set(cfg.dirac_cone(), cfg.emitter_spec(), cfg.system_spec(), cfg.lattice_spec(),
                            None, 400, 1)
        delta, g = grouped_bath(ms)
        c2 = exact_c2(delta, g, 1.0, np.array([0.0, 1e-9]))
        shifts.append(-np.angle(c2[1]) / 1e-9)
        predicted.append(cfg.kernel_params().dispersive_shift())
    exp = np.log(shifts[1] / shifts[0]) / np.log(Vs[1] / Vs[0])
    line = (f"INFO criterion 7: physical V in [1e-18, 1e-17] m^3 is dispersive; frequency "
            f"{shifts[0]:.4e} rad/s at 1e-18 (sum_rule/Omega_D = {predicted[0]:.4e}), exponent = {exp:.4f}")
    REPORT.append(line)
    print(line)
    assert exp == pytest.approx(-1.0, abs=0.01)


# -- 8 ----------------------------------------------------------------------


def test_c8_band_solver(ref_config):
    rng = np.random.default_rng(8)
    lat = ref_config.lattice_spec()
    worst = 0.0
    for _ in range(1000):
        model = random_model(rng)
        k = rng.uniform(-1, 1, 2) * lat.gamma_K * 1.5
        ours = np.array([pair.omega for pair in solve_supercell_bands(model, k)])
        A, B = model.matrices(k)
        ref = np.sqrt(charpoly_eigvals(A, B, 1.0)) * model.nu
        worst = max(worst, float(np.max(np.abs(ours - ref) / np.abs(ref))))
    model = ref_config.tight_binding_model()
    radius = lat.gamma_K * ref_config.model.fit_radius_fraction_of_GK
    fit = fit_dirac_cone(model, fit_radius=radius)
    # normalized by slope * fit radius, which is stricter than slope * delta_kappa
    resid = fit.max_residual / (fit.cone.slope * radius)
    ok = worst <= 1e-10 and fit.gap_at_K <= 1e-6 * model.nu and resid <= 0.01
    report(8, ok, f"1000 random models max rel = {worst:.2e} (tol 1e-10); K gap = {fit.gap_at_K:.2e} rad/s "
                  f"(<= 1e-6 nu = {1e-6 * model.nu:.2e}); cone residual = {100 * resid:.3f}% of slope*radius (<= 1%)")
    assert ok


# -- 9 ----------------------------------------------------------------------


def test_c9_entanglement(reference_run):
    traj = reference_run["traj"]
    pop = np.abs(traj.c2) ** 2
    j = int(np.argmax(pop < 0.5))
    assert j > 0, "population never crosses 1/2"
    f = (pop[j - 1] - 0.5) / (pop[j - 1] - pop[j])
    S_cross = traj.entropy[j - 1] + f * (traj.entropy[j] - traj.entropy[j - 1])
    t_cross = traj.t[j - 1] + f * (traj.t[j] - traj.t[j - 1])
    ok = traj.entropy[0] <= 1e-9 and S_cross > 0.5
    report(9, ok, f"entropy(0) = {traj.entropy[0]:.1e} bits (<= 1e-9); entropy at |c2|^2 = 1/2 "
                  f"(t = {t_cross:.3e} s) = {S_cross:.4f} bits (> 0.5)")
    assert ok
