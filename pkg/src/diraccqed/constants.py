"""Physical constants (CODATA via :mod:`scipy.constants`)."""
from dataclasses import dataclass

from scipy import constants as _codata


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _codata.hbar
    epsilon0: float = _codata.epsilon_0
    c: float = _codata.c
    # 1 D = 1e-21 / c  C m
    debye: float = 1e-21 / _codata.c


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar
EPSILON0 = CONSTANTS.epsilon0
C_LIGHT = CONSTANTS.c
DEBYE = CONSTANTS.debye
