import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import linalg

from spinprobe.constants import MILLIGAUSS, NANOKELVIN
from spinprobe.cross_sections import TabulatedCrossSections
from spinprobe.dynamics import (
    RateMatrix,
    build_rate_matrix,
    detailed_balance_residuals,
    evolve_trace,
    exact_counts,
    population_map,
    propagate,
    propagate_many,
    spectral_gap,
    ssa_simulate,
    steady_state,
    steady_state_from_sigmas,
)
from spinprobe.exceptions import MissingChannelError, SteadyStateError
from spinprobe.states import SpinDistribution

rates = st.floats(min_value=0.01, max_value=100.0)
rate_vectors = st.lists(rates, min_size=12, max_size=12)


def _random_Q(values):
    endo = np.array([0.0, *values[:6]])
    exo = np.array([*values[6:], 0.0])
    return RateMatrix(endo, exo)


def test_generator_structure():
    Q = RateMatrix.uniform(1.0, 2.0)
    G = Q.generator
    np.testing.assert_allclose(G.sum(axis=0), 0.0, atol=1e-15)
    # endoergic moves index i -> i-1 (m_F up), exoergic i -> i+1
    assert G[0, 1] == 1.0 and G[2, 1] == 2.0
    assert Q.max_rate == 3.0
    with pytest.raises(ValueError):
        RateMatrix(np.ones(7), np.zeros(7))


def test_geometric_steady_state():
    p = steady_state(RateMatrix.uniform(1.0, 2.0))
    expected = np.array([1, 2, 4, 8, 16, 32, 64]) / 127
    np.testing.assert_allclose(p.p, expected, rtol=1e-14)


def test_steady_state_scale_invariant():
    Q = RateMatrix.uniform(1.0, 2.0)
    np.testing.assert_allclose(steady_state(Q.scaled(1e6)).p, steady_state(Q).p, rtol=1e-13)


def test_zero_rates_have_no_unique_steady_state():
    with pytest.raises(SteadyStateError, match="non-unique"):
        steady_state(RateMatrix.uniform(0.0, 0.0))
    # a break in the chain leaves two closed classes
    endo = np.array([0, 1, 1, 0, 1, 1, 1.0])
    exo = np.array([1, 1, 0, 1, 1, 1, 0.0])
    with pytest.raises(SteadyStateError):
        steady_state(RateMatrix(endo, exo))


def test_absorbing_chain():
    p = steady_state(RateMatrix.uniform(0.0, 1.0))
    assert p.population(-3) == 1.0


@given(rate_vectors)
def test_steady_state_properties(values):
    Q = _random_Q(values)
    p = steady_state(Q)
    assert np.all(p.p >= 0) and p.p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(detailed_balance_residuals(Q, p))) <= 1e-12 * Q.max_rate
    np.testing.assert_allclose(Q.generator @ p.p, 0.0, atol=1e-12 * Q.max_rate)


@given(rate_vectors, st.floats(min_value=0.0, max_value=1.0), st.integers(min_value=-3, max_value=3))
def test_propagation_conserves_probability(values, t, m0):
    Q = _random_Q(values)
    p = propagate(Q, SpinDistribution.delta(m0), t)
    assert abs(p.p.sum() - 1.0) < 1e-12
    assert np.all(p.p >= 0)


def test_long_time_limit_matches_null_space():
    Q = RateMatrix.uniform(3.0, 5.0)
    t = 40.0 / spectral_gap(Q)
    far = propagate(Q, SpinDistribution.delta(2), t)
    assert far.total_variation(steady_state(Q)) < 1e-9


def test_propagate_rejects_negative_time():
    with pytest.raises(ValueError):
        propagate(RateMatrix.uniform(1, 1), SpinDistribution.delta(0), -1.0)


def test_two_state_analytic():
    # only m_F = +3 <-> +2 connected: relaxation at rate endo + exo
    endo = np.zeros(7)
    exo = np.zeros(7)
    endo[1], exo[0] = 2.0, 3.0
    Q = RateMatrix(endo, exo)
    t = 0.37
    p = propagate(Q, SpinDistribution.delta(3), t)
    p_inf = 2.0 / 5.0
    assert p.population(3) == pytest.approx(p_inf + (1 - p_inf) * np.exp(-5.0 * t), rel=1e-13)


def test_counts_quadrature_matches_exact():
    Q = RateMatrix.uniform(4.0, 7.0)
    times = np.linspace(0.0, 1.0, 11)
    trace = evolve_trace(Q, SpinDistribution.delta(2), times)
    ne, nx = exact_counts(Q, SpinDistribution.delta(2), 1.0)
    assert trace.n_endo[-1] == pytest.approx(ne, rel=1e-8)
    assert trace.n_exo[-1] == pytest.approx(nx, rel=1e-8)
    assert np.all(np.diff(trace.n_spin) >= 0)


def test_exact_counts_constant_rate():
    # uniform total rate from every interior state: counts grow linearly at first
    Q = RateMatrix.uniform(1.0, 1.0)
    ne, nx = exact_counts(Q, SpinDistribution.delta(0), 1e-6)
    assert ne == pytest.approx(1e-6, rel=1e-5) and nx == pytest.approx(1e-6, rel=1e-5)


def test_trace_validates_grid():
    with pytest.raises(ValueError):
        evolve_trace(RateMatrix.uniform(1, 1), SpinDistribution.delta(0), [0.1, 0.2])


def test_build_rate_matrix_lab_parameters(bath, probe, synthetic):
    Q = build_rate_matrix(synthetic, bath, probe, 10 * MILLIGAUSS)
    assert Q.endo[0] == 0 and Q.exo[-1] == 0
    # synthetic exoergic sigma is energy independent, so all six exo rates coincide
    np.testing.assert_allclose(Q.exo[:-1], Q.exo[0])
    assert Q.endo[1] / Q.exo[0] == pytest.approx(np.exp(-0.4198211347661498), rel=1e-10)


def test_temperature_override(bath, probe, synthetic):
    Q1 = build_rate_matrix(synthetic, bath, probe, 10 * MILLIGAUSS, 600 * NANOKELVIN)
    Q2 = build_rate_matrix(synthetic, bath.with_temperature(600 * NANOKELVIN), probe, 10 * MILLIGAUSS)
    np.testing.assert_array_equal(Q1.generator, Q2.generator)


def test_missing_channel(bath, probe):
    with pytest.raises(MissingChannelError):
        build_rate_matrix(TabulatedCrossSections([]), bath, probe, 10 * MILLIGAUSS)


def test_steady_state_from_sigmas_ratio(bath, probe, synthetic):
    B, T = 25 * MILLIGAUSS, 500 * NANOKELVIN
    p = steady_state_from_sigmas(synthetic, B, T)
    ratio = p.population(1) / p.population(0)
    Q = build_rate_matrix(synthetic, bath, probe, B, T)
    assert ratio == pytest.approx(Q.endo[3] / Q.exo[2], rel=1e-12)


def test_population_map(bath, probe, synthetic):
    f = population_map(synthetic, bath, probe, 0.3, field=10 * MILLIGAUSS)
    g = population_map(synthetic, bath, probe, 0.3, vary="field", temperature=bath.temperature)
    assert f(bath.temperature) == g(10 * MILLIGAUSS)
    s = population_map(synthetic, bath, probe, None, field=10 * MILLIGAUSS)
    assert isinstance(s(bath.temperature), SpinDistribution)
    with pytest.raises(ValueError):
        population_map(synthetic, bath, probe, 0.3)
    with pytest.raises(ValueError):
        population_map(synthetic, bath, probe, 0.3, vary="pressure")


def test_ssa_matches_expm_small():
    Q = RateMatrix.uniform(2.0, 3.0)
    p0 = SpinDistribution.delta(2)
    cks = [0.2, 0.5, 1.0]
    res = ssa_simulate(Q, p0, cks, 20000, seed=11)
    ref = propagate_many(Q, p0, cks)
    assert np.max(0.5 * np.abs(res.distributions - ref).sum(axis=1)) < 0.02
    for k, t in enumerate(cks):
        ne, nx = exact_counts(Q, p0, t)
        assert abs(res.mean_endo[k] - ne) < 4 * res.sem_endo[k]
        assert abs(res.mean_exo[k] - nx) < 4 * res.sem_exo[k]


def test_ssa_deterministic_across_workers():
    Q = RateMatrix.uniform(2.0, 3.0)
    p0 = SpinDistribution.delta(0)
    a = ssa_simulate(Q, p0, [0.3, 0.9], 600, seed=5, n_jobs=1)
    b = ssa_simulate(Q, p0, [0.3, 0.9], 600, seed=5, n_jobs=3)
    np.testing.assert_array_equal(a.occupancy, b.occupancy)
    np.testing.assert_array_equal(a.mean_endo, b.mean_endo)
    c = ssa_simulate(Q, p0, [0.3, 0.9], 600, seed=6)
    assert not np.array_equal(a.occupancy, c.occupancy)


def test_ssa_validation():
    Q = RateMatrix.uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        ssa_simulate(Q, SpinDistribution.delta(0), [0.5, 0.1], 10, seed=0)
    with pytest.raises(ValueError):
        ssa_simulate(Q, SpinDistribution.delta(0), [0.5], 0, seed=0)


def test_expm_agrees_with_eigendecomposition():
    Q = RateMatrix.uniform(1.3, 2.9)
    w, V = linalg.eig(Q.generator)
    t = 0.8
    p0 = SpinDistribution.delta(1).p
    via_eig = (V @ np.diag(np.exp(w * t)) @ linalg.inv(V) @ p0).real
    np.testing.assert_allclose(propagate(Q, p0, t).p, via_eig, atol=1e-12)
