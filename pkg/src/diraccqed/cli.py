"""Command-line front end: ``diraccqed bands|evolve|sweep|kernel-probe``.

Every run writes its outputs plus ``manifest.json`` into the output
directory.  Engine failures exit with status 1 and leave a manifest whose
``status`` is ``"failed"``; outputs written before the failure stay listed.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io
from .bands import band_path, fit_dirac_cone
from .config import RunConfig
from .coupling import build_mode_set
from .errors import ConeFitError, DiracCQEDError, InsufficientDataError
from .laplace import invert_c2, kernel_lower, kernel_total, kernel_upper
from .ode import amplitude_decay, evolve, oscillation_frequency

THREADS_ENV = "DIRACCQED_NUM_THREADS"

SWEEP_KEYS = {"V": "system.V_m3", "Nc": "system.Nc", "d21": "emitter.d21_debye"}


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config: dict
    derived: dict = field(default_factory=dict)
    version: str = field(default_factory=tool_version)
    started: str = field(default_factory=_now)
    finished: str | None = None
    status: str = "running"
    error: str | None = None
    outputs: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def add(self, path):
        self.outputs.append(Path(path).name)
        return path

    def write(self, directory):
        self.finished = _now()
        io.write_json(Path(directory) / "manifest.json", self.__dict__)


class _Run:
    """Shared state of one CLI invocation."""

    def __init__(self, command, cfg, out):
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(command, cfg.to_dict())

    def path(self, name):
        return self.manifest.add(self.out / name)


# -- commands --------------------------------------------------------------


def cmd_bands(run):
    cfg = run.cfg
    model = cfg.tight_binding_model()
    lat = cfg.lattice_spec()
    run.manifest.derived = {"gamma_K_per_m": lat.gamma_K, "nu_rad_s": model.nu,
                            "omega21_rad_s": cfg.emitter_spec().omega21}
    table = band_path(model, lat.default_path(), cfg.model.samples_per_segment)
    io.write_band_table(run.path("bands.csv"), table)
    radius = cfg.model.fit_radius_fraction_of_GK * lat.gamma_K
    try:
        fit = fit_dirac_cone(model, fit_radius=radius)
    except ConeFitError as exc:
        wK = table.omega2 - table.omega1
        io.write_json(run.path("cone_fit.json"), {
            "error": str(exc), "min_band_gap_on_path_rad_s": float(wK.min()), "nu_rad_s": model.nu})
        raise
    report = {
        "omega_D_rad_s": fit.cone.omega_D,
        "alpha_m_s": fit.cone.slope,
        "fit_radius_per_m": radius,
        "max_residual_rad_s": fit.max_residual,
        "relative_residual": fit.max_residual / (fit.cone.slope * radius),
        "gap_at_K_rad_s": fit.gap_at_K,
        "flagged": fit.flagged,
    }
    io.write_json(run.path("cone_fit.json"), report)
    run.manifest.results["cone_fit"] = report


def _time_grid(T, samples):
    return np.array([0.0]) if T == 0 else np.linspace(0.0, T, samples)


def _run_ode(cfg, params_T):
    lat, emitter, system = cfg.lattice_spec(), cfg.emitter_spec(), cfg.system_spec()
    modeset = build_mode_set(cfg.dirac_cone(), emitter, system, lat, cfg.profile(),
                             cfg.bath.n_radial, cfg.bath.n_azimuthal)
    traj = evolve(cfg.initial_state(), modeset, params_T, cfg.run.tolerance, cfg.run.samples)
    return modeset, traj


def _run_laplace(cfg, params, T):
    t = _time_grid(T, cfg.run.samples)
    return invert_c2(params, cfg.initial_state().c2, t, sigma=cfg.run.sigma_rad_s,
                     omega_max=cfg.run.omega_max_rad_s, tol=cfg.run.inversion_tol)


def _frequency(t, x):
    try:
        rep = oscillation_frequency(t, x)
    except InsufficientDataError as exc:
        return {"error": str(exc)}, None
    return rep.as_dict(), rep


def cmd_evolve(run, export_modes=False):
    cfg = run.cfg
    params = cfg.kernel_params()
    run.manifest.derived = cfg.derived()
    T = cfg.duration(params)
    engine = cfg.run.engine
    res = run.manifest.results
    traj = lap = None
    if engine in ("ode", "both"):
        t0 = time.perf_counter()
        modeset, traj = _run_ode(cfg, T)
        io.write_ode_trajectory(run.path("trajectory_ode.csv"), traj)
        if export_modes:
            modeset.to_csv(run.path("modes.csv"))
        res["ode"] = {"n_modes": len(modeset), "norm_drift": traj.norm_drift,
                      "c1_deviation": float(np.max(np.abs(traj.c1 - traj.c1[0]))),
                      "n_steps": traj.n_steps, "seconds": time.perf_counter() - t0}
    if engine in ("laplace", "both"):
        t0 = time.perf_counter()
        lap = _run_laplace(cfg, params, T)
        io.write_laplace_trajectory(run.path("trajectory_laplace.csv"), lap)
        res["laplace"] = {"max_err_est": lap.max_error, "sigma_rad_s": lap.sigma,
                          "omega_max_rad_s": lap.omega_max, "n_nodes": lap.n_nodes,
                          "seconds": time.perf_counter() - t0}
    if traj is not None and lap is not None:
        io.write_comparison(run.path("comparison.csv"), traj.t, traj.c2.real, lap.values.real)
        res["max_abs_deviation_re_c2"] = float(np.max(np.abs(traj.c2.real - lap.values.real)))
    t, c2 = (traj.t, traj.c2) if traj is not None else (lap.t, lap.values)
    freq, _ = _frequency(t, c2.real)
    io.write_json(run.path("frequency.json"), freq)
    res["frequency"] = freq


def cmd_sweep(run, parameter, values):
    cfg = run.cfg
    key = SWEEP_KEYS[parameter]
    run.manifest.derived = cfg.derived()
    rows = []
    for v in values:
        vcfg = cfg.with_overrides([f"{key}={v}"])
        params = vcfg.kernel_params()
        T = vcfg.duration(params)
        row = {"parameter": parameter, "value": v, "chi21_over_alpha2_rad_s": params.scale,
               "collective_rate_rad_s": params.collective_rate(), "T_s": T}
        if vcfg.run.engine == "laplace":
            lap = _run_laplace(vcfg, params, T)
            t, x = lap.t, lap.values.real
        else:
            _, traj = _run_ode(vcfg, T)
            t, x = traj.t, traj.c2.real
        try:
            rep = oscillation_frequency(t, x)
            row["omega_rad_s"] = rep.zero_crossing_rad_s
            row["spectrum_peak_rad_s"] = rep.spectrum_peak_rad_s
            row["decay_rate_per_s"], _ = amplitude_decay(t, x, rep.zero_crossing_rad_s)
            row["error"] = ""
        except InsufficientDataError as exc:
            row["error"] = str(exc)
        rows.append(row)
    header = ["parameter", "value", "omega_rad_s", "spectrum_peak_rad_s", "decay_rate_per_s",
              "chi21_over_alpha2_rad_s", "collective_rate_rad_s", "T_s", "error"]
    io.write_rows(run.path("sweep.csv"), header, rows)
    ok = [r for r in rows if not r["error"]]
    fit = {"parameter": parameter, "n_valid": len(ok), "exponent": None,
           "strictly_decreasing": None}
    if len(ok) >= 2:
        x = np.log([float(r["value"]) for r in ok])
        y = np.log([r["omega_rad_s"] for r in ok])
        fit["exponent"] = float(np.polyfit(x, y, 1)[0])
        order = np.argsort(x)
        fit["strictly_decreasing"] = bool(np.all(np.diff(y[order]) < 0))
    io.write_json(run.path("sweep_fit.json"), fit)
    run.manifest.results["sweep"] = fit


def cmd_kernel_probe(run, re_s=None, im_min=None, im_max=None, points=401, part="total"):
    cfg = run.cfg
    params = cfg.kernel_params()
    run.manifest.derived = cfg.derived()
    span = 3 * max(params.bandwidth, params.collective_rate())
    re_s = 0.01 * params.bandwidth if re_s is None else re_s
    im_min = -span if im_min is None else im_min
    im_max = span if im_max is None else im_max
    s = re_s + 1j * np.linspace(im_min, im_max, points)
    if part == "discrete":
        modeset = build_mode_set(cfg.dirac_cone(), cfg.emitter_spec(), cfg.system_spec(),
                                 cfg.lattice_spec(), cfg.profile(), cfg.bath.n_radial,
                                 cfg.bath.n_azimuthal)
        K = modeset.kernel(s)
    else:
        K = {"total": kernel_total, "lower": kernel_lower, "upper": kernel_upper}[part](s, params)
    io.write_kernel_probe(run.path("kernel_probe.csv"), s, K)
    run.manifest.results["kernel_probe"] = {"part": part, "points": points}


# -- argument parsing ------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (defaults when omitted)")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--engine", choices=["ode", "laplace", "both"], help="overrides run.engine")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="dot-path config override, e.g. system.V_m3=1e-25 (repeatable)")

    parser = argparse.ArgumentParser(prog="diraccqed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bands", parents=[common], help="band structure and Dirac-cone fit")
    ev = sub.add_parser("evolve", parents=[common], help="emitter dynamics (ODE and/or Laplace)")
    ev.add_argument("--export-modes", action="store_true", help="also write the discretized mode set")
    sw = sub.add_parser("sweep", parents=[common], help="oscillation frequency versus a parameter")
    sw.add_argument("--param", required=True, choices=sorted(SWEEP_KEYS))
    sw.add_argument("--values", nargs="*", type=float, default=[])
    kp = sub.add_parser("kernel-probe", parents=[common], help="memory kernel on a vertical line in s")
    kp.add_argument("--re-s", type=float, help="Re s (rad/s); default 0.01 alpha delta_kappa")
    kp.add_argument("--im-min", type=float)
    kp.add_argument("--im-max", type=float)
    kp.add_argument("--points", type=int, default=401)
    kp.add_argument("--part", choices=["total", "lower", "upper", "discrete"], default="total")
    return parser


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(raw))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep" and len(args.values) < 2:
        parser.error("sweep needs at least two --values")
    if args.command == "kernel-probe" and args.points < 1:
        parser.error("--points must be >= 1")
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        overrides = list(args.override)
        if args.engine:
            overrides.append(f"run.engine={args.engine}")
        if args.out:
            overrides.append(f"output.directory={args.out}")
        cfg = cfg.with_overrides(overrides)
    except DiracCQEDError as exc:
        parser.error(str(exc))

    run = _Run(args.command, cfg, cfg.output.directory)
    limiter = _thread_limit()
    try:
        if args.command == "bands":
            cmd_bands(run)
        elif args.command == "evolve":
            cmd_evolve(run, export_modes=args.export_modes)
        elif args.command == "sweep":
            cmd_sweep(run, args.param, args.values)
        else:
            cmd_kernel_probe(run, args.re_s, args.im_min, args.im_max, args.points, args.part)
        run.manifest.status = "complete"
        code = 0
    except (DiracCQEDError, ValueError, OSError) as exc:
        run.manifest.status = "failed"
        run.manifest.error = f"{type(exc).__name__}: {exc}"
        print(f"error: {run.manifest.error}", file=sys.stderr)
        code = 1
    finally:
        if limiter is not None:
            limiter.unregister()
    run.manifest.write(run.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
