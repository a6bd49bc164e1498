import math

import numpy as np
import pytest
from scipy import integrate

from spinprobe.constants import CM6, K_B, M_CS133, M_RB87, NANOKELVIN
from spinprobe.trap import (
    BathSpec,
    ProbeSpec,
    cloud_widths,
    density_overlap,
    gaussian_width,
    mean_relative_speed,
    momentum_transfer_factor,
    reduced_mass,
    thermalization_rate,
    three_body_rate,
)

from conftest import lab_bath


def _gauss(x, s):
    return np.exp(-0.5 * (x / s) ** 2) / (math.sqrt(2 * math.pi) * s)


def _axis_integrals(sb, sp):
    lim = 12 * max(sb, sp)
    one, _ = integrate.quad(lambda x: _gauss(x, sb) * _gauss(x, sp), -lim, lim, epsrel=1e-13, epsabs=0)
    two, _ = integrate.quad(lambda x: _gauss(x, sb) ** 2 * _gauss(x, sp), -lim, lim, epsrel=1e-13, epsabs=0)
    return one, two


@pytest.mark.parametrize("scale", [1.0, 0.7, 1.6])
def test_overlap_against_quadrature(scale):
    bath = lab_bath()
    probe = ProbeSpec(trap_scale=scale)
    n1, n2 = bath.n_rb, bath.n_rb**2
    for sb, sp in zip(*cloud_widths(bath, probe)):
        one, two = _axis_integrals(sb, sp)
        n1 *= one
        n2 *= two
    ov = density_overlap(bath, probe)
    assert ov.n_mean == pytest.approx(n1, rel=1e-10)
    assert ov.n2_mean == pytest.approx(n2, rel=1e-10)


def test_width_formula():
    s = gaussian_width(400 * NANOKELVIN, M_RB87, 2 * math.pi * 330)
    assert s == pytest.approx(math.sqrt(K_B * 400e-9 / M_RB87) / (2 * math.pi * 330), rel=1e-14)
    assert s == pytest.approx(2.983e-6, rel=1e-3)


def test_three_body_with_lab_parameters():
    loss = three_body_rate(28e-26 * CM6, density_overlap(lab_bath(), ProbeSpec()).n2_mean)
    # frozen from the quadrature oracle above
    assert loss.rate == pytest.approx(0.5135667201231658, rel=1e-9)
    assert loss.lifetime == pytest.approx(1 / loss.rate)
    assert three_body_rate(0.0, 1e30).lifetime == math.inf


def test_kinematics():
    mu = reduced_mass(M_RB87, M_CS133)
    assert mu == pytest.approx(M_RB87 * M_CS133 / (M_RB87 + M_CS133))
    v = mean_relative_speed(400 * NANOKELVIN)
    assert v == pytest.approx(math.sqrt(8 * K_B * 400e-9 / (math.pi * mu)))
    assert momentum_transfer_factor() == pytest.approx(0.95621, abs=1e-5)
    assert momentum_transfer_factor(1.0, 1.0) == 1.0


def test_thermalization_rate():
    g = thermalization_rate(30.0, 7000, 1)
    assert g == pytest.approx(30.0 / 3 * momentum_transfer_factor() * 7001 / 7000)
    with pytest.raises(ValueError):
        thermalization_rate(-1.0, 7000, 1)


def test_spec_validation():
    with pytest.raises(ValueError):
        BathSpec(0, 1e-7, 1.0, 1.0)
    with pytest.raises(ValueError):
        ProbeSpec(initial_mF=4)
    with pytest.raises(ValueError):
        ProbeSpec(trap_scale=0)
    assert lab_bath().with_temperature(1e-6).temperature == 1e-6
