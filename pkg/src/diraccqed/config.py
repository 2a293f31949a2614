"""Run configuration: JSON with units in key names, degrees for angles."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .bands import DiracCone, PRESETS, fit_dirac_cone, load_overlap_file
from .coupling import AngularProfile, EmitterSpec, SystemSpec, debye_to_si
from .errors import ConfigError
from .laplace import KernelParams
from .lattice import LatticeSpec
from .ode import InitialState


@dataclass
class LatticeCfg:
    a_m: float = 1e-6


@dataclass
class ModelCfg:
    preset: str | None = "symmetric"
    overlap_file: str | None = None
    nu_rad_s: float | None = None  # None: emitter transition frequency
    norm_tol: float = 1e-6
    fit_radius_fraction_of_GK: float = 0.01
    samples_per_segment: int = 100


@dataclass
class ConeCfg:
    source: str = "explicit"  # "explicit" | "fit"
    omega_D_rad_s: float | None = None  # None: emitter transition frequency
    alpha_m_s: float = 5.38e7
    delta_kappa_per_m: float | None = None
    delta_kappa_fraction_of_GK: float = 0.1


@dataclass
class EmitterCfg:
    lambda21_m: float = 1.55e-6
    d21_debye: float = 100.0
    theta_a_deg: float = 90.0
    phi_a_deg: float = 0.0


@dataclass
class SystemCfg:
    Nc: int = 7
    V_m3: float = 3e-26


@dataclass
class BathCfg:
    n_radial: int = 200
    n_azimuthal: int = 64
    profile_file: str | None = None


@dataclass
class RunCfg:
    engine: str = "both"  # "ode" | "laplace" | "both"
    T_s: float | None = None  # None: four periods of the collective rate
    samples: int = 2000
    tolerance: float = 1e-9
    inversion_tol: float = 1e-4
    sigma_rad_s: float | None = None
    omega_max_rad_s: float | None = None


@dataclass
class OutputCfg:
    directory: str = "out"


SECTIONS = {
    "lattice": LatticeCfg,
    "model": ModelCfg,
    "cone": ConeCfg,
    "emitter": EmitterCfg,
    "system": SystemCfg,
    "bath": BathCfg,
    "run": RunCfg,
    "output": OutputCfg,
}


@dataclass
class RunConfig:
    lattice: LatticeCfg = field(default_factory=LatticeCfg)
    model: ModelCfg = field(default_factory=ModelCfg)
    cone: ConeCfg = field(default_factory=ConeCfg)
    emitter: EmitterCfg = field(default_factory=EmitterCfg)
    system: SystemCfg = field(default_factory=SystemCfg)
    bath: BathCfg = field(default_factory=BathCfg)
    run: RunCfg = field(default_factory=RunCfg)
    output: OutputCfg = field(default_factory=OutputCfg)

    # -- (de)serialization ----------------------------------------------

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for name, section in SECTIONS.items():
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                raise ConfigError(f"section {name!r} must be an object")
            allowed = {f.name for f in fields(section)}
            bad = set(raw) - allowed
            if bad:
                raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
            kwargs[name] = section(**raw)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_dict(self):
        return asdict(self)

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def with_overrides(self, overrides):
        """Apply ``section.key=value`` strings; values are parsed as JSON when possible."""
        data = copy.deepcopy(self.to_dict())
        for item in overrides or ():
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            parts = key.strip().split(".")
            if len(parts) != 2 or parts[0] not in data or parts[1] not in data[parts[0]]:
                raise ConfigError(f"override key {key!r} does not name a config field")
            try:
                parsed = json.loads(value)
            except json.JSONDecodeError:
                parsed = value
            data[parts[0]][parts[1]] = parsed
        return RunConfig.from_dict(data)

    def validate(self):
        def positive(name, v):
            if v is None or not np.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be positive, got {v!r}")

        positive("lattice.a_m", self.lattice.a_m)
        positive("emitter.lambda21_m", self.emitter.lambda21_m)
        positive("system.V_m3", self.system.V_m3)
        positive("cone.alpha_m_s", self.cone.alpha_m_s)
        positive("run.tolerance", self.run.tolerance)
        if self.emitter.d21_debye < 0:
            raise ConfigError("emitter.d21_debye must be non-negative")
        if not 0 <= self.emitter.theta_a_deg <= 90:
            raise ConfigError("emitter.theta_a_deg must lie in [0, 90]")
        if int(self.system.Nc) != self.system.Nc or self.system.Nc < 1:
            raise ConfigError("system.Nc must be a positive integer")
        if self.run.engine not in ("ode", "laplace", "both"):
            raise ConfigError(f"run.engine must be ode, laplace or both, got {self.run.engine!r}")
        if self.cone.source not in ("explicit", "fit"):
            raise ConfigError(f"cone.source must be explicit or fit, got {self.cone.source!r}")
        if self.run.T_s is not None and self.run.T_s < 0:
            raise ConfigError("run.T_s must be non-negative")
        if self.run.samples < 1 or self.bath.n_radial < 1 or self.bath.n_azimuthal < 1:
            raise ConfigError("sample counts must be >= 1")
        if self.model.preset is None and self.model.overlap_file is None:
            raise ConfigError("model needs a preset or an overlap_file")
        if self.model.preset is not None and self.model.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.model.preset!r}; choose from {sorted(PRESETS)}")

    # -- resolved physical objects --------------------------------------

    def lattice_spec(self):
        return LatticeSpec(self.lattice.a_m)

    def emitter_spec(self):
        e = self.emitter
        return EmitterSpec(debye_to_si(e.d21_debye), lambda21=e.lambda21_m,
                           theta_a=np.deg2rad(e.theta_a_deg), phi_a=np.deg2rad(e.phi_a_deg))

    def system_spec(self):
        return SystemSpec(int(self.system.Nc), self.system.V_m3)

    def initial_state(self):
        return InitialState(np.deg2rad(self.emitter.theta_a_deg), np.deg2rad(self.emitter.phi_a_deg))

    def profile(self):
        if self.bath.profile_file:
            return AngularProfile.from_csv(self.bath.profile_file)
        return AngularProfile.constant()

    def tight_binding_model(self):
        lat = self.lattice_spec()
        nu = self.model.nu_rad_s or self.emitter_spec().omega21
        if self.model.overlap_file:
            return load_overlap_file(self.model.overlap_file, lat, norm_tol=self.model.norm_tol)
        return PRESETS[self.model.preset](lat, nu)

    def delta_kappa(self):
        if self.cone.delta_kappa_per_m is not None:
            return float(self.cone.delta_kappa_per_m)
        return self.cone.delta_kappa_fraction_of_GK * self.lattice_spec().gamma_K

    def dirac_cone(self):
        lat = self.lattice_spec()
        if self.cone.source == "fit":
            fit = fit_dirac_cone(self.tight_binding_model(),
                                 fit_radius=self.model.fit_radius_fraction_of_GK * lat.gamma_K)
            return DiracCone(fit.cone.omega_D, fit.cone.slope, self.delta_kappa(), lat.K)
        omega_D = self.cone.omega_D_rad_s or self.emitter_spec().omega21
        return DiracCone(omega_D, self.cone.alpha_m_s, self.delta_kappa(), lat.K)

    def kernel_params(self, cone=None):
        return KernelParams.from_physical(self.lattice_spec(), cone or self.dirac_cone(),
                                          self.emitter_spec(), self.system_spec())

    def duration(self, params=None):
        """``run.T_s`` or four periods of the collective rate."""
        if self.run.T_s is not None:
            return float(self.run.T_s)
        params = params or self.kernel_params()
        rate = params.collective_rate()
        if rate == 0:
            raise ConfigError("run.T_s must be given when the emitter is uncoupled")
        return 4 * 2 * np.pi / rate

    def derived(self):
        """Quantities recomputable from the config alone, for the manifest."""
        lat = self.lattice_spec()
        p = self.kernel_params()
        return {
            "omega21_rad_s": self.emitter_spec().omega21,
            "gamma_K_per_m": lat.gamma_K,
            "delta_kappa_per_m": p.delta_kappa,
            "omega_D_rad_s": p.omega_D,
            "alpha_m_s": p.alpha,
            "Delta_D_rad_s": p.Delta_D,
            "chi21": p.chi21,
            "chi21_over_alpha2_rad_s": p.scale,
            "bandwidth_rad_s": p.bandwidth,
            "sum_rule_rad2_s2": p.sum_rule(),
            "collective_rate_rad_s": p.collective_rate(),
            "T_s": self.duration(p),
        }
