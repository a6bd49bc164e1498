"""Energy moments, entropy, Bures distance and Fisher-information sensitivity."""
from dataclasses import dataclass

import numpy as np

from .dynamics import build_rate_matrix, propagate_many, steady_state
from .states import N_STATES, SpinDistribution, level_energies

UNDERFLOW = 1e-300


def _vec(p):
    v = np.asarray(p, dtype=float)
    if v.shape != (N_STATES,):
        raise ValueError("expected 7 populations")
    return np.where(v < UNDERFLOW, 0.0, v)


@dataclass(frozen=True)
class ObservableSet:
    mean_E: float
    var_E: float
    sigma_E: float
    entropy_over_kB: float


def mean_energy(p, B):
    """``<E> = sum_mF p(m_F) (3 - m_F) dE/2`` in J."""
    return float(_vec(p) @ level_energies(B).level_energy)


def energy_variance(p, B):
    """Energy variance (J^2) and its square root, ``(var, sigma)``.

    Computed about the mean, which avoids cancellation in <E^2> - <E>^2.
    """
    v = _vec(p)
    E = level_energies(B).level_energy
    mean = v @ E
    var = float(max(v @ (E - mean) ** 2, 0.0))
    return var, float(np.sqrt(var))


def entropy(p):
    """Shannon entropy in units of k_B (natural log), with 0 log 0 = 0."""
    v = _vec(p)
    nz = v[v > 0]
    return float(max(-np.sum(nz * np.log(nz)), 0.0))


def observables(p, B):
    var, sd = energy_variance(p, B)
    return ObservableSet(mean_energy(p, B), var, sd, entropy(p))


def bures_distance(p, q):
    """Bures distance of two diagonal states, ``sqrt(2 - 2 sum sqrt(p q))``.

    Evaluated as ``||sqrt(p) - sqrt(q)||_2``, identical for normalized inputs
    and free of cancellation for nearby distributions.
    """
    return float(np.linalg.norm(np.sqrt(_vec(p)) - np.sqrt(_vec(q))))


@dataclass(frozen=True)
class FisherEstimate:
    """Sensitivity ``sqrt(F)`` as the mean of the two one-sided slopes."""

    sqrtF: float
    left: float
    right: float


def _origin_slope(offsets, distances):
    return float(np.dot(offsets, distances) / np.dot(offsets, offsets))


def default_delta_grid(theta0, rel=0.02):
    delta = rel * abs(theta0)
    return np.array([delta / 4.0, delta / 2.0, delta])


def _check_offsets(delta_grid):
    offsets = np.asarray(delta_grid, dtype=float)
    if offsets.ndim != 1 or offsets.size == 0:
        raise ValueError("delta_grid must be a nonempty 1-d sequence")
    if np.any(offsets <= 0) or np.any(np.diff(offsets) <= 0):
        raise ValueError("offsets must be positive and increasing")
    return offsets


def fisher_from_populations(center, minus, plus, offsets):
    """Slopes from precomputed populations at ``theta0`` and ``theta0 -/+ offsets``."""
    offsets = _check_offsets(offsets)
    if len(minus) != offsets.size or len(plus) != offsets.size:
        raise ValueError("need one population vector per offset on each side")
    d_minus = np.array([bures_distance(center, q) for q in minus])
    d_plus = np.array([bures_distance(center, q) for q in plus])
    left = _origin_slope(offsets, d_minus)
    right = _origin_slope(offsets, d_plus)
    return FisherEstimate(0.5 * (left + right), left, right)


def fisher_sqrt(population_map, theta0, delta_grid=None):
    """Sensitivity ``sqrt(F_theta)`` from the linear growth of the Bures distance.

    Origin-constrained least-squares slopes of ``d_Bures`` against ``|dtheta|``
    are fitted separately for negative and positive offsets; their mean is
    the headline value.
    """
    offsets = _check_offsets(default_delta_grid(theta0) if delta_grid is None else delta_grid)
    center = population_map(theta0)
    minus = [population_map(theta0 - d) for d in offsets]
    plus = [population_map(theta0 + d) for d in offsets]
    return fisher_from_populations(center, minus, plus, offsets)


@dataclass(frozen=True, eq=False)
class SensitivityTrace:
    theta: str
    theta0: float
    delta_grid: np.ndarray
    times: np.ndarray
    sqrtF: np.ndarray
    left: np.ndarray
    right: np.ndarray
    steady: FisherEstimate
    entropy: np.ndarray

    @property
    def peak_index(self):
        return int(np.argmax(self.sqrtF))

    @property
    def peak_time(self):
        return float(self.times[self.peak_index])

    @property
    def peak_to_steady(self):
        if self.steady.sqrtF == 0:
            return np.inf if self.sqrtF.max() > 0 else np.nan
        return float(self.sqrtF.max() / self.steady.sqrtF)

    @property
    def entropy_peak_time(self):
        return float(self.times[int(np.argmax(self.entropy))])


def sensitivity_trace(provider, bath, probe, B, T, theta, times, delta_grid=None):
    """Time-resolved sensitivity to temperature (``theta="temperature"``, K)
    or field (``theta="field"``, T), plus the steady-state value."""
    if theta not in ("temperature", "field"):
        raise ValueError("theta must be 'temperature' or 'field'")
    theta0 = T if theta == "temperature" else B
    offsets = _check_offsets(default_delta_grid(theta0) if delta_grid is None else delta_grid)
    times = np.asarray(times, dtype=float)
    p0 = SpinDistribution.delta(probe.initial_mF)

    def rates(value):
        if theta == "temperature":
            return build_rate_matrix(provider, bath, probe, B, value)
        return build_rate_matrix(provider, bath, probe, value, T)

    def evolve(Q):
        return propagate_many(Q, p0, times)

    Q0 = rates(theta0)
    Qm = [rates(theta0 - d) for d in offsets]
    Qp = [rates(theta0 + d) for d in offsets]
    center = evolve(Q0)
    minus = [evolve(Q) for Q in Qm]
    plus = [evolve(Q) for Q in Qp]

    sqrtF = np.empty(times.size)
    left = np.empty(times.size)
    right = np.empty(times.size)
    for k in range(times.size):
        est = fisher_from_populations(center[k], [m[k] for m in minus], [p[k] for p in plus], offsets)
        sqrtF[k], left[k], right[k] = est.sqrtF, est.left, est.right

    def stationary(Q):
        # with every rate zero the chain never leaves p0
        return p0 if Q.max_rate == 0 else steady_state(Q)

    steady = fisher_from_populations(
        stationary(Q0), [stationary(Q) for Q in Qm], [stationary(Q) for Q in Qp], offsets
    )
    ent = np.array([entropy(row) for row in center])
    return SensitivityTrace(theta, theta0, offsets, times, sqrtF, left, right, steady, ent)


@dataclass(frozen=True, eq=False)
class EntropyCurve:
    n_spin: np.ndarray
    entropy: np.ndarray
    times: np.ndarray

    @property
    def peak_index(self):
        return int(np.argmax(self.entropy))

    @property
    def peak_n_spin(self):
        return float(self.n_spin[self.peak_index])

    @property
    def peak_time(self):
        return float(self.times[self.peak_index])

    @property
    def peak_entropy(self):
        return float(self.entropy[self.peak_index])


def entropy_vs_collisions(trace):
    """Probe entropy against the cumulative number of spin-exchange collisions."""
    ent = np.array([entropy(row) for row in trace.populations])
    return EntropyCurve(n_spin=trace.n_endo + trace.n_exo, entropy=ent, times=trace.times)
