"""Emitter parameters, Rabi couplings and the discretized Dirac-disc bath."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bands import DiracCone, linearized_frequency
from .constants import C_LIGHT, DEBYE, EPSILON0, HBAR
from .errors import ModelError
from .lattice import LatticeSpec


def debye_to_si(d):
    """Dipole moment in Debye to C m."""
    if d < 0:
        raise ValueError(f"dipole moment must be non-negative, got {d}")
    return d * DEBYE


def transition_frequency(lambda21):
    """Angular transition frequency ``2 pi c / lambda`` (rad/s)."""
    if not lambda21 > 0:
        raise ValueError(f"wavelength must be positive, got {lambda21}")
    return 2 * np.pi * C_LIGHT / lambda21


@dataclass(frozen=True)
class EmitterSpec:
    """Two-level emitter at the cavity centre.

    Give either ``lambda21`` (m) or ``omega21`` (rad/s); the other is derived.
    ``d21`` is in C m.
    """

    d21: float
    lambda21: float | None = None
    omega21: float | None = None
    theta_a: float = np.pi / 2
    phi_a: float = 0.0
    dipole_axis: tuple = (1.0, 0.0)

    def __post_init__(self):
        if (self.lambda21 is None) == (self.omega21 is None):
            raise ValueError("specify exactly one of lambda21 or omega21")
        if self.lambda21 is not None:
            object.__setattr__(self, "omega21", transition_frequency(self.lambda21))
        else:
            if not self.omega21 > 0:
                raise ValueError("omega21 must be positive")
            object.__setattr__(self, "lambda21", 2 * np.pi * C_LIGHT / self.omega21)
        if self.d21 < 0:
            raise ValueError("d21 must be non-negative")
        if not 0 <= self.theta_a <= np.pi / 2:
            raise ValueError("theta_a must lie in [0, pi/2]")
        axis = np.asarray(self.dipole_axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1) > 1e-12:
            raise ValueError("dipole_axis must be a unit vector")


@dataclass(frozen=True)
class SystemSpec:
    """``Nc`` coupled cavities of effective mode volume ``V`` (m^3)."""

    Nc: int
    V: float

    def __post_init__(self):
        if int(self.Nc) != self.Nc or self.Nc < 1:
            raise ModelError(f"Nc must be a positive integer, got {self.Nc}")
        if not self.V > 0:
            raise ModelError(f"mode volume must be positive, got {self.V}")


def rabi_magnitude(emitter, system, Omega, b_sq=1.0, polarization_overlap=1.0):
    """Single-mode coupling ``|g|`` (rad/s) of the emitter to a mode at ``Omega``.

    ``b_sq`` is the weight ``|b_1|^2`` of the dipole-aligned cavity mode in
    the Bloch state; ``polarization_overlap`` is 1 for a dipole parallel to it.
    """
    Omega = np.asarray(Omega, dtype=float)
    if np.any(Omega <= 0):
        raise ValueError("mode frequency must be positive")
    if not 0 <= polarization_overlap <= 1:
        raise ValueError("polarization_overlap must lie in [0, 1]")
    SystemSpec(system.Nc, system.V)
    amp = np.sqrt(HBAR / (2 * EPSILON0 * Omega * system.Nc * system.V))
    return emitter.omega21 / HBAR * amp * np.sqrt(b_sq) * polarization_overlap * emitter.d21


# -- angular profile -------------------------------------------------------


@dataclass(frozen=True)
class AngularProfile:
    """``|b_{1,p}(phi)|^2`` for both bands, normalized to integrate to pi.

    ``phi`` is ``None`` for the constant profile (value 1/2), otherwise a
    grid on ``[0, 2 pi)`` with per-band tabulated values; evaluation uses
    periodic linear interpolation.
    """

    phi: np.ndarray | None = None
    band1: np.ndarray | None = None
    band2: np.ndarray | None = None
    tol: float = 1e-6

    def __post_init__(self):
        if self.phi is None:
            return
        phi = np.asarray(self.phi, dtype=float)
        if np.any(np.diff(phi) <= 0) or phi[0] < 0 or phi[-1] >= 2 * np.pi:
            raise ValueError("profile phi must be strictly increasing on [0, 2 pi)")
        for p in (1, 2):
            total = self.integral(p)
            if abs(total - np.pi) > self.tol * np.pi:
                raise ValueError(f"band {p} profile integrates to {total:.8g}, expected pi")

    @classmethod
    def constant(cls):
        return cls()

    def _table(self, p):
        return np.asarray(self.band1 if p == 1 else self.band2, dtype=float)

    def __call__(self, phi, p):
        phi = np.asarray(phi, dtype=float)
        if self.phi is None:
            return np.full(phi.shape, 0.5)
        return np.interp(np.mod(phi, 2 * np.pi), self.phi, self._table(p), period=2 * np.pi)

    def integral(self, p):
        """Periodic trapezoid integral of the tabulated band-``p`` profile."""
        if self.phi is None:
            return np.pi
        phi = np.append(self.phi, self.phi[0] + 2 * np.pi)
        vals = self._table(p)
        return float(np.trapezoid(np.append(vals, vals[0]), phi))

    @classmethod
    def from_csv(cls, path, tol=1e-6):
        """Read a ``phi,b1sq_band1,b1sq_band2`` table (phi in radians)."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"phi", "b1sq_band1", "b1sq_band2"} - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"{path}: missing columns {sorted(missing)}")
            rows = [(float(r["phi"]), float(r["b1sq_band1"]), float(r["b1sq_band2"])) for r in reader]
        arr = np.array(rows)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], tol=tol)


# -- disc sampling and mode set -------------------------------------------


def sample_disc(delta_kappa, n_radial, n_azimuthal):
    """Midpoint polar grid on a disc of radius ``delta_kappa``.

    Returns arrays ``(kappa, phi, weight)`` of length ``n_radial*n_azimuthal``;
    the weights partition the disc area ``pi delta_kappa^2``.
    """
    if n_radial < 1 or n_azimuthal < 1:
        raise ValueError("n_radial and n_azimuthal must be >= 1")
    if not delta_kappa > 0:
        raise ValueError("delta_kappa must be positive")
    h = delta_kappa / n_radial
    dphi = 2 * np.pi / n_azimuthal
    k = (np.arange(n_radial) + 0.5) * h
    phi = (np.arange(n_azimuthal) + 0.5) * dphi
    K, P = np.meshgrid(k, phi, indexing="ij")
    return K.ravel(), P.ravel(), (K * h * dphi).ravel()


@dataclass(frozen=True)
class Mode:
    kappa: float
    phi: float
    p: int
    Omega: float
    Delta: float
    g: complex
    weight: float


@dataclass(frozen=True)
class ModeSet:
    """Discretized bath, stored column-wise.

    Iterating yields :class:`Mode` records; the arrays are what the
    integrators consume.
    """

    kappa: np.ndarray
    phi: np.ndarray
    band: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    g: np.ndarray
    weight: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.kappa) == 0:
            raise ModelError("mode set is empty")
        for name in ("kappa", "phi", "band", "omega", "delta", "g", "weight"):
            getattr(self, name).setflags(write=False)

    def __len__(self):
        return len(self.kappa)

    def __iter__(self):
        for i in range(len(self)):
            yield Mode(float(self.kappa[i]), float(self.phi[i]), int(self.band[i]),
                       float(self.omega[i]), float(self.delta[i]), complex(self.g[i]),
                       float(self.weight[i]))

    @property
    def coupling_sq(self):
        return np.abs(self.g) ** 2

    def sum_rule(self):
        """``sum_j |g_j|^2``, the large-``s`` limit of ``s K(s)``."""
        return float(self.coupling_sq.sum())

    def kernel(self, s):
        """Discrete memory kernel ``sum_j |g_j|^2 / (s + i Delta_j)``."""
        s = np.asarray(s, dtype=complex)
        g2 = self.coupling_sq
        return (g2[None, :] / (s.reshape(-1, 1) + 1j * self.delta[None, :])).sum(axis=1).reshape(s.shape)

    def conjugate(self):
        """Mode set with reversed detunings and conjugated couplings."""
        return ModeSet(self.kappa, self.phi, self.band, self.omega, -self.delta,
                       np.conj(self.g), self.weight, dict(self.provenance, conjugated=True))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kappa", "phi", "band", "omega", "delta", "g_abs", "weight"])
            for row in zip(self.kappa, self.phi, self.band, self.omega, self.delta, np.abs(self.g), self.weight):
                w.writerow([repr(float(v)) if i != 2 else int(v) for i, v in enumerate(row)])


def build_mode_set(cone, emitter, system, lattice, profile=None, n_radial=200, n_azimuthal=64):
    """Discretize the Dirac-disc bath around K into individual modes.

    Each grid point ``j`` of one disc yields a lower-band and an upper-band
    mode with

        |g_j|^2 = S/(2 pi)^2 * w_j * omega21^2 d21^2 |b_{1,p}(phi_j)|^2
                  / (2 hbar eps0 Omega_j Nc V)

    and zero coupling phase.  A single disc is emitted: with the unit-cell
    area ``S = 2 sqrt(3) a^2`` this reproduces the closed-form kernel
    strength ``chi21`` exactly (see README, "Bath normalization").
    """
    if not isinstance(lattice, LatticeSpec):
        raise TypeError("lattice must be a LatticeSpec")
    if cone.slope * cone.delta_kappa >= cone.omega_D:
        raise ModelError("lower Dirac band reaches zero frequency on the disc")
    profile = profile or AngularProfile.constant()
    k, phi, w = sample_disc(cone.delta_kappa, n_radial, n_azimuthal)
    cols = {name: [] for name in ("kappa", "phi", "band", "omega", "delta", "g", "weight")}
    pref = lattice.S / (2 * np.pi) ** 2
    for p in (1, 2):
        Om = linearized_frequency(cone, k, p)
        b_sq = profile(phi, p)
        g = np.sqrt(pref * w) * rabi_magnitude(emitter, system, Om, b_sq)
        cols["kappa"].append(k)
        cols["phi"].append(phi)
        cols["band"].append(np.full(k.shape, p))
        cols["omega"].append(Om)
        cols["delta"].append(Om - emitter.omega21)
        cols["g"].append(g.astype(complex))
        cols["weight"].append(w)
    arrays = {name: np.concatenate(v) for name, v in cols.items()}
    provenance = {
        "omega_D": cone.omega_D,
        "slope": cone.slope,
        "delta_kappa": cone.delta_kappa,
        "n_radial": n_radial,
        "n_azimuthal": n_azimuthal,
        "omega21": emitter.omega21,
        "d21": emitter.d21,
        "Nc": system.Nc,
        "V": system.V,
        "a": lattice.a,
    }
    return ModeSet(**arrays, provenance=provenance)
