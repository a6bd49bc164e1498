"""Physical constants (CODATA 2018) and boundary unit conversions.

Everything inside the package is SI. The helpers below are the only place
where laboratory units (nK, mG, cm^2, Hz) are translated.
"""
from dataclasses import dataclass

import numpy as np

K_B = 1.380649e-23  # J/K, exact
MU_B = 9.2740100783e-24  # J/T
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg
M_RB87 = 86.909180520 * ATOMIC_MASS_UNIT
M_CS133 = 132.905451961 * ATOMIC_MASS_UNIT
G_F_PROBE = 0.25  # |g_F| of the Cs F=3 manifold

NANOKELVIN = 1e-9
MILLIGAUSS = 1e-7
CM2 = 1e-4
CM6 = 1e-12


@dataclass(frozen=True)
class PhysicalConstants:
    k_B: float = K_B
    mu_B: float = MU_B
    m_Rb: float = M_RB87
    m_Cs: float = M_CS133
    g_F_probe: float = G_F_PROBE

    def __post_init__(self):
        for name in ("k_B", "mu_B", "m_Rb", "m_Cs", "g_F_probe"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


CONSTANTS = PhysicalConstants()


def from_nK(value):
    return np.multiply(value, NANOKELVIN)


def to_nK(value):
    return np.divide(value, NANOKELVIN)


def from_mG(value):
    return np.multiply(value, MILLIGAUSS)


def to_mG(value):
    return np.divide(value, MILLIGAUSS)


def from_cm2(value):
    return np.multiply(value, CM2)


def to_cm2(value):
    return np.divide(value, CM2)


def energy_from_nK(value):
    """Energy in J of a temperature-equivalent given in nK."""
    return np.multiply(value, NANOKELVIN * K_B)


def energy_to_nK(value):
    return np.divide(value, NANOKELVIN * K_B)


def angular_from_Hz(value):
    return np.multiply(value, 2.0 * np.pi)
