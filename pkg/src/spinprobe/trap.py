"""Harmonic-trap densities, collision kinematics and loss diagnostics."""
import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import K_B, M_CS133, M_RB87
from .states import check_mF


@dataclass(frozen=True)
class BathSpec:
    """Thermal bath cloud. Angular trap frequencies in rad/s, temperature in K."""

    n_rb: float
    temperature: float
    omega_r: float
    omega_z: float
    mass: float = M_RB87

    def __post_init__(self):
        if not self.n_rb > 0:
            raise ValueError("n_rb must be > 0")
        if not self.temperature >= 0:
            raise ValueError("temperature must be >= 0")
        if not (self.omega_r > 0 and self.omega_z > 0):
            raise ValueError("trap frequencies must be > 0")
        if not self.mass > 0:
            raise ValueError("mass must be > 0")

    def with_temperature(self, temperature):
        return replace(self, temperature=temperature)


@dataclass(frozen=True)
class ProbeSpec:
    """Probe atoms; their trap is the bath trap scaled by ``trap_scale``."""

    n_cs: int = 1
    initial_mF: int = 2
    trap_scale: float = 1.0
    mass: float = M_CS133

    def __post_init__(self):
        if not self.n_cs >= 1:
            raise ValueError("n_cs must be >= 1")
        object.__setattr__(self, "initial_mF", check_mF(self.initial_mF))
        if not self.trap_scale > 0:
            raise ValueError("trap_scale must be > 0")
        if not self.mass > 0:
            raise ValueError("mass must be > 0")


@dataclass(frozen=True)
class OverlapResult:
    n_mean: float  # m^-3
    n2_mean: float  # m^-6


def gaussian_width(temperature, mass, omega):
    """rms width ``sqrt(k_B T / (m omega^2))`` of a thermal cloud along one axis."""
    if not (temperature > 0 and mass > 0 and omega > 0):
        raise ValueError("temperature, mass and omega must be > 0")
    return math.sqrt(K_B * temperature / (mass * omega * omega))


def _overlap_1d(s_bath, s_probe):
    # int g(x; s_bath) g(x; s_probe) dx for unit-normalized Gaussians
    return 1.0 / math.sqrt(2.0 * math.pi * (s_bath**2 + s_probe**2))


def _overlap2_1d(s_bath, s_probe):
    # int g(x; s_bath)^2 g(x; s_probe) dx; g^2 is a Gaussian of width s/sqrt 2
    return _overlap_1d(s_bath / math.sqrt(2.0), s_probe) / (2.0 * math.sqrt(math.pi) * s_bath)


def cloud_widths(bath, probe):
    """Per-axis (x, y, z) widths of the bath and probe clouds, in m."""
    T = bath.temperature
    bath_w = (
        gaussian_width(T, bath.mass, bath.omega_r),
        gaussian_width(T, bath.mass, bath.omega_r),
        gaussian_width(T, bath.mass, bath.omega_z),
    )
    probe_w = (
        gaussian_width(T, probe.mass, bath.omega_r * probe.trap_scale),
        gaussian_width(T, probe.mass, bath.omega_r * probe.trap_scale),
        gaussian_width(T, probe.mass, bath.omega_z * probe.trap_scale),
    )
    return bath_w, probe_w


def density_overlap(bath, probe):
    """Bath density seen by one probe atom, ``<n>``, and ``<n^2>``.

    The probe density is normalized to one atom; the bath holds ``n_rb``.
    """
    bath_w, probe_w = cloud_widths(bath, probe)
    n1 = bath.n_rb
    n2 = bath.n_rb**2
    for sb, sp in zip(bath_w, probe_w):
        n1 *= _overlap_1d(sb, sp)
        n2 *= _overlap2_1d(sb, sp)
    return OverlapResult(n_mean=n1, n2_mean=n2)


def reduced_mass(m1, m2):
    return m1 * m2 / (m1 + m2)


def mean_relative_speed(temperature, m1=M_RB87, m2=M_CS133):
    """Thermal mean relative speed ``sqrt(8 k_B T / (pi mu))``."""
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    return math.sqrt(8.0 * K_B * temperature / (math.pi * reduced_mass(m1, m2)))


def momentum_transfer_factor(m1=M_RB87, m2=M_CS133):
    return 4.0 * m1 * m2 / (m1 + m2) ** 2


def thermalization_rate(gamma_el, n_rb, n_cs, m_bath=M_RB87, m_probe=M_CS133):
    """Probe thermalization rate from the elastic collision rate."""
    if gamma_el < 0 or n_cs < 0:
        raise ValueError("inputs must be nonnegative")
    if not n_rb > 0:
        raise ValueError("n_rb must be > 0")
    xi = momentum_transfer_factor(m_bath, m_probe)
    return gamma_el / 3.0 * xi * (n_rb + n_cs) / n_rb


@dataclass(frozen=True)
class ThreeBodyLoss:
    rate: float  # 1/s
    lifetime: float  # s


def three_body_rate(L3, n2_mean):
    """Rb-Rb-Cs loss rate ``L3 <n^2>`` (L3 in m^6/s) and the probe lifetime."""
    if L3 < 0:
        raise ValueError("L3 must be nonnegative")
    rate = L3 * n2_mean
    lifetime = 1.0 / rate if rate > 0 else np.inf
    return ThreeBodyLoss(rate=rate, lifetime=lifetime)
