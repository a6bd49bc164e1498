import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinprobe.constants import K_B, MILLIGAUSS, NANOKELVIN
from spinprobe.states import (
    MF_VALUES,
    SpinDistribution,
    check_mF,
    endoergic_threshold,
    level_energies,
    state_index,
    zeeman_half_splitting,
)

# mu_B * 1 mG / 4 / k_B in nK from the CODATA literals (mpmath, 40 digits)
HALF_STEP_10MG_NK = 167.92845390645993


def test_state_order():
    assert MF_VALUES == (3, 2, 1, 0, -1, -2, -3)
    assert [state_index(m) for m in MF_VALUES] == list(range(7))


@pytest.mark.parametrize("bad", [4, -4, 2.5])
def test_check_mF_rejects(bad):
    with pytest.raises(ValueError):
        check_mF(bad)


def test_check_mF_rejects_bool():
    with pytest.raises(TypeError):
        check_mF(True)


def test_half_splitting_value():
    half = zeeman_half_splitting(10 * MILLIGAUSS)
    assert half / K_B / NANOKELVIN == pytest.approx(HALF_STEP_10MG_NK, rel=1e-14)
    assert endoergic_threshold(10 * MILLIGAUSS) == half


def test_negative_field_rejected():
    with pytest.raises(ValueError):
        zeeman_half_splitting(-1e-9)


def test_level_ladder():
    B = 25 * MILLIGAUSS
    ladder = level_energies(B)
    assert ladder.energy(3) == 0.0
    assert ladder.energy(-3) == pytest.approx(6 * ladder.half_step)
    assert np.allclose(np.diff(ladder.level_energy), ladder.half_step)


def test_distribution_validation():
    with pytest.raises(ValueError, match="nonnegative"):
        SpinDistribution([1.1, -0.1, 0, 0, 0, 0, 0])
    with pytest.raises(ValueError, match="sum"):
        SpinDistribution([0.5, 0, 0, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        SpinDistribution([1.0, 0, 0])
    with pytest.raises(ValueError, match="finite"):
        SpinDistribution([np.nan, 0, 0, 0, 0, 0, 1])


def test_small_drift_renormalized():
    p = SpinDistribution([0.5 + 5e-10, 0.5, 0, 0, 0, 0, 0])
    assert p.p.sum() == pytest.approx(1.0, abs=1e-15)


def test_distribution_is_read_only():
    p = SpinDistribution.delta(2)
    with pytest.raises(ValueError):
        p.p[0] = 1.0
    arr = np.asarray(p)
    arr[0] = 5.0
    assert p.population(3) == 0.0


def test_distribution_accessors():
    p = SpinDistribution.delta(-1)
    assert p.population(-1) == 1.0
    assert p.as_dict()[-1] == 1.0
    assert p == SpinDistribution.delta(-1)
    assert hash(p) == hash(SpinDistribution.delta(-1))
    assert p.total_variation(SpinDistribution.delta(0)) == 1.0
    assert SpinDistribution.uniform().p.sum() == pytest.approx(1.0)
    assert repr(p).startswith("SpinDistribution(-1: ") is False and "-1: 1" in repr(p)


@given(st.lists(st.floats(min_value=0, max_value=1), min_size=7, max_size=7).filter(lambda v: sum(v) > 0))
def test_normalized_input_round_trip(values):
    v = np.array(values) / sum(values)
    p = SpinDistribution(v)
    assert np.allclose(p.p, v, atol=1e-15)
    assert np.all(p.p >= 0)
