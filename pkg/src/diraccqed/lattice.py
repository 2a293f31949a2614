"""Triangular supercell geometry and Brillouin-zone points."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError


def reciprocal_basis(a1, a2):
    """Reciprocal vectors ``b1, b2`` with ``bi . aj = 2 pi delta_ij``.

    Raises
    ------
    GeometryError
        If ``a1`` and ``a2`` are (numerically) linearly dependent.
    """
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    if a1.shape != (2,) or a2.shape != (2,):
        raise GeometryError("primitive vectors must be 2D")
    cross = a1[0] * a2[1] - a1[1] * a2[0]
    scale = np.linalg.norm(a1) * np.linalg.norm(a2)
    if scale == 0 or abs(cross) <= 1e-12 * scale:
        raise GeometryError("primitive vectors are linearly dependent")
    # rows of 2 pi (A^T)^{-1}, written out for the 2x2 case
    b1 = 2 * np.pi * np.array([a2[1], -a2[0]]) / cross
    b2 = 2 * np.pi * np.array([-a1[1], a1[0]]) / cross
    return b1, b2


@dataclass(frozen=True)
class LatticeSpec:
    """Triangular supercell with lattice constant ``a`` (m).

    ``S`` follows the supercell convention ``S = 2 sqrt(3) a^2`` used by the
    coupling prefactor; it is not ``|a1 x a2|``.
    """

    a: float
    a1: np.ndarray = field(init=False, repr=False)
    a2: np.ndarray = field(init=False, repr=False)
    b1: np.ndarray = field(init=False, repr=False)
    b2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.a) or self.a <= 0:
            raise GeometryError(f"lattice constant must be positive, got {self.a}")
        a1 = np.array([self.a, 0.0])
        a2 = np.array([self.a / 2, self.a * np.sqrt(3) / 2])
        b1, b2 = reciprocal_basis(a1, a2)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)

    @property
    def S(self):
        return 2 * np.sqrt(3) * self.a**2

    @property
    def gamma(self):
        return np.zeros(2)

    @property
    def K(self):
        return k_point_K(self)

    @property
    def M(self):
        return self.b1 / 2 + self.b2 / 2

    @property
    def gamma_K(self):
        """Distance from Gamma to the zone corner, ``4 pi / (3 a)``."""
        return float(np.linalg.norm(self.K))

    def default_path(self):
        """Gamma - M - K - Gamma vertices."""
        return [self.gamma, self.M, self.K, self.gamma]


def k_point_K(lattice):
    """Zone corner K of the triangular lattice, ``|K| = 4 pi / (3a)``."""
    return (2 * lattice.b1 + lattice.b2) / 3
