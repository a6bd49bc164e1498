"""Seven-state spin-exchange rate model.

The generator ``Q`` acts on column vectors of populations ordered
m_F = +3 ... -3, ``dp/dt = Q p``, with ``Q[j, i]`` the rate from state
``i`` to state ``j``. Endoergic exchange moves m_F up (index down),
exoergic exchange moves m_F down (index up).
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, linalg

from .collisions import thermal_average_sigma
from .cross_sections import ALL_CHANNELS
from .exceptions import MissingChannelError, NumericalError, SteadyStateError
from .states import N_STATES, SpinDistribution, state_index
from .trap import density_overlap, mean_relative_speed

logger = logging.getLogger(__name__)

CONSERVATION_TOL = 1e-9
POSITIVITY_TOL = 1e-12
SIMPSON_STEP = 0.05  # max substep in units of 1 / max_rate


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Endoergic and exoergic rates (1/s) out of each state.

    ``endo[i]`` and ``exo[i]`` are indexed like populations (m_F = 3 - i);
    ``endo[0]`` and ``exo[6]`` are necessarily zero.
    """

    endo: np.ndarray
    exo: np.ndarray

    def __post_init__(self):
        endo = np.array(self.endo, dtype=float)
        exo = np.array(self.exo, dtype=float)
        if endo.shape != (N_STATES,) or exo.shape != (N_STATES,):
            raise ValueError("endo and exo must each hold 7 rates")
        if not (np.all(np.isfinite(endo)) and np.all(np.isfinite(exo))):
            raise ValueError("rates must be finite")
        if np.any(endo < 0) or np.any(exo < 0):
            raise ValueError("rates must be nonnegative")
        if endo[0] != 0 or exo[-1] != 0:
            raise ValueError("no endoergic rate out of m_F=+3 and no exoergic rate out of m_F=-3")
        endo.setflags(write=False)
        exo.setflags(write=False)
        object.__setattr__(self, "endo", endo)
        object.__setattr__(self, "exo", exo)

    @classmethod
    def uniform(cls, endo, exo):
        e = np.full(N_STATES, float(endo))
        x = np.full(N_STATES, float(exo))
        e[0] = 0.0
        x[-1] = 0.0
        return cls(e, x)

    @classmethod
    def from_channel_rates(cls, rates):
        """Build from a mapping ``CollisionChannel -> rate`` covering all 12 channels."""
        endo = np.zeros(N_STATES)
        exo = np.zeros(N_STATES)
        for ch in ALL_CHANNELS:
            if ch not in rates:
                raise MissingChannelError(f"no rate for {ch}")
            target = endo if ch.is_endoergic else exo
            target[state_index(ch.initial_mF)] = rates[ch]
        return cls(endo, exo)

    def rate(self, channel):
        arr = self.endo if channel.is_endoergic else self.exo
        return float(arr[state_index(channel.initial_mF)])

    def channel_rates(self):
        return {ch: self.rate(ch) for ch in ALL_CHANNELS}

    @cached_property
    def generator(self):
        Q = np.zeros((N_STATES, N_STATES))
        idx = np.arange(N_STATES)
        Q[idx[1:] - 1, idx[1:]] = self.endo[1:]
        Q[idx[:-1] + 1, idx[:-1]] = self.exo[:-1]
        Q[idx, idx] = -(self.endo + self.exo)
        Q.setflags(write=False)
        return Q

    @property
    def exit_rates(self):
        return self.endo + self.exo

    @property
    def max_rate(self):
        return float(self.exit_rates.max())

    def scaled(self, factor):
        return RateMatrix(self.endo * factor, self.exo * factor)

    def __repr__(self):
        return f"RateMatrix(endo={self.endo.tolist()}, exo={self.exo.tolist()})"


def build_rate_matrix(provider, bath, probe, B, T=None):
    """Rates ``<n> sigma_i(B, T) v_bar`` for all twelve channels.

    ``T`` defaults to the bath temperature; when given, it replaces the bath
    temperature everywhere (cloud sizes, relative speed, thermal averages).
    """
    T = bath.temperature if T is None else T
    if not T > 0:
        raise ValueError("temperature must be > 0")
    missing = [str(ch) for ch in ALL_CHANNELS if ch not in provider.channels]
    if missing:
        raise MissingChannelError(f"provider lacks channels {', '.join(missing)}")
    overlap = density_overlap(bath.with_temperature(T), probe)
    vbar = mean_relative_speed(T, bath.mass, probe.mass)
    prefactor = overlap.n_mean * vbar
    rates = {ch: prefactor * thermal_average_sigma(provider, ch, B, T) for ch in ALL_CHANNELS}
    return RateMatrix.from_channel_rates(rates)


def rates_from_sigmas(provider, B, T):
    """Rate matrix with ``<n> = v_bar = 1``; only its null space is meaningful."""
    missing = [str(ch) for ch in ALL_CHANNELS if ch not in provider.channels]
    if missing:
        raise MissingChannelError(f"provider lacks channels {', '.join(missing)}")
    return RateMatrix.from_channel_rates(
        {ch: thermal_average_sigma(provider, ch, B, T) for ch in ALL_CHANNELS}
    )


def _as_vector(p0):
    if isinstance(p0, SpinDistribution):
        return p0.p.copy()
    return SpinDistribution(p0).p.copy()


def _checked(vec):
    drift = abs(vec.sum() - 1.0)
    if drift > CONSERVATION_TOL:
        raise NumericalError(f"probability drift {drift:.3g} exceeds {CONSERVATION_TOL}")
    if vec.min() < -POSITIVITY_TOL:
        raise NumericalError(f"negative population {vec.min():.3g}")
    return SpinDistribution(np.clip(vec, 0.0, None))


def propagate(Q, p0, t):
    """Populations ``exp(Q t) p0`` after time ``t`` (s)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    vec = _as_vector(p0)
    if t == 0:
        return SpinDistribution(vec)
    return _checked(linalg.expm(Q.generator * t) @ vec)


def propagate_many(Q, p0, times):
    """Populations at several times, shape ``(len(times), 7)``."""
    vec = _as_vector(p0)
    out = np.empty((len(times), N_STATES))
    for k, t in enumerate(times):
        out[k] = propagate(Q, vec, t).p
    return out


@dataclass(frozen=True, eq=False)
class TimeTrace:
    """Populations and cumulative mean collision counts on a time grid."""

    times: np.ndarray
    populations: np.ndarray
    n_endo: np.ndarray
    n_exo: np.ndarray

    @property
    def distributions(self):
        return [SpinDistribution(row) for row in self.populations]

    @property
    def n_spin(self):
        return self.n_endo + self.n_exo


def _interval_counts(Q, vec, dt):
    """Simpson integrals of endo/exo flux over ``[0, dt]`` starting from ``vec``."""
    m = max(2, math.ceil(dt * Q.max_rate / SIMPSON_STEP))
    m += m % 2
    h = dt / m
    step = linalg.expm(Q.generator * h)
    nodes = np.empty((m + 1, N_STATES))
    nodes[0] = vec
    for k in range(m):
        nodes[k + 1] = step @ nodes[k]
    endo_flux = nodes @ Q.endo
    exo_flux = nodes @ Q.exo
    return integrate.simpson(endo_flux, dx=h), integrate.simpson(exo_flux, dx=h)


def evolve_trace(Q, p0, times):
    """Propagate on a time grid and integrate the mean collision counts.

    ``times`` must be sorted and start at 0.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] != 0:
        raise ValueError("time grid must start at 0")
    if np.any(np.diff(times) < 0):
        raise ValueError("time grid must be sorted")
    vec = _as_vector(p0)
    pops = propagate_many(Q, vec, times)
    n_endo = np.zeros(times.size)
    n_exo = np.zeros(times.size)
    if Q.max_rate > 0:
        for k in range(1, times.size):
            dt = times[k] - times[k - 1]
            if dt == 0:
                n_endo[k], n_exo[k] = n_endo[k - 1], n_exo[k - 1]
                continue
            start = linalg.expm(Q.generator * times[k - 1]) @ vec
            de, dx = _interval_counts(Q, start, dt)
            n_endo[k] = n_endo[k - 1] + max(de, 0.0)
            n_exo[k] = n_exo[k - 1] + max(dx, 0.0)
    return TimeTrace(times=times, populations=pops, n_endo=n_endo, n_exo=n_exo)


def exact_counts(Q, p0, t):
    """Mean endo/exo counts up to ``t`` from the augmented-matrix exponential.

    ``int_0^t exp(Q s) ds p0`` is the upper-right block of ``exp(A t)`` with
    ``A = [[Q, I], [0, 0]]``; no quadrature involved.
    """
    vec = _as_vector(p0)
    A = np.zeros((2 * N_STATES, 2 * N_STATES))
    A[:N_STATES, :N_STATES] = Q.generator
    A[:N_STATES, N_STATES:] = np.eye(N_STATES)
    occupancy = linalg.expm(A * t)[:N_STATES, N_STATES:] @ vec
    return float(occupancy @ Q.endo), float(occupancy @ Q.exo)


def spectral_gap(Q):
    """Smallest nonzero relaxation rate of the chain (1/s)."""
    eig = np.sort(np.abs(np.linalg.eigvals(Q.generator).real))
    scale = max(Q.max_rate, np.finfo(float).tiny)
    nonzero = eig[eig > 1e-10 * scale]
    if nonzero.size == 0:
        raise SteadyStateError("chain has no relaxation (all rates zero)")
    return float(nonzero[0])


def steady_state(Q, return_condition=False):
    """Stationary distribution, solving ``Q p = 0`` with ``sum(p) = 1``.

    Raises
    ------
    SteadyStateError
        If the stationary distribution is not unique (zero matrix or more than
        one closed class).
    """
    G = Q.generator
    if Q.max_rate == 0:
        raise SteadyStateError("non-unique steady state: all rates are zero")
    scaled = G / Q.max_rate
    rank = np.linalg.matrix_rank(scaled, tol=1e-10)
    if rank != N_STATES - 1:
        raise SteadyStateError(f"non-unique steady state: generator rank {rank}")
    A = scaled.copy()
    A[-1, :] = 1.0
    rhs = np.zeros(N_STATES)
    rhs[-1] = 1.0
    cond = float(np.linalg.cond(A))
    logger.debug("steady-state system condition number %.3g", cond)
    vec = np.linalg.solve(A, rhs)
    # roundoff can leave -1e-17 entries at absorbing-chain zeros
    vec[np.abs(vec) < 1e-15] = 0.0
    dist = _checked(vec)
    return (dist, cond) if return_condition else dist


def detailed_balance_residuals(Q, p):
    """``p(i) exo(i) - p(i+1) endo(i+1)`` for the six adjacent pairs."""
    vec = np.asarray(p, dtype=float)
    return vec[:-1] * Q.exo[:-1] - vec[1:] * Q.endo[1:]


def steady_state_from_sigmas(provider, B, T):
    return steady_state(rates_from_sigmas(provider, B, T))


def population_map(provider, bath, probe, t, vary="temperature", field=None, temperature=None):
    """Callable ``theta -> SpinDistribution`` at interaction time ``t``.

    ``vary`` selects the free parameter (``"temperature"`` in K or ``"field"``
    in T); the other one is held at ``field`` or ``temperature``. ``t=None``
    gives the steady state.
    """
    if vary == "temperature":
        if field is None:
            raise ValueError("field must be fixed when varying temperature")

        def rates(theta):
            return build_rate_matrix(provider, bath, probe, field, theta)

    elif vary == "field":
        T = bath.temperature if temperature is None else temperature

        def rates(theta):
            return build_rate_matrix(provider, bath, probe, theta, T)

    else:
        raise ValueError(f"vary must be 'temperature' or 'field', got {vary!r}")
    p0 = SpinDistribution.delta(probe.initial_mF)

    def evaluate(theta):
        Q = rates(theta)
        return steady_state(Q) if t is None else propagate(Q, p0, t)

    return evaluate


@dataclass(frozen=True, eq=False)
class SsaResult:
    """Empirical statistics of a jump-process ensemble at the checkpoints."""

    n_trajectories: int
    checkpoints: np.ndarray
    distributions: np.ndarray
    mean_endo: np.ndarray
    mean_exo: np.ndarray
    sem_endo: np.ndarray
    sem_exo: np.ndarray
    rng_seed: int
    occupancy: np.ndarray = field(repr=False)


def _sample_chunk(endo, exo, p0, checkpoints, seed, start, stop):
    n_ck = len(checkpoints)
    occ = np.zeros((n_ck, N_STATES), dtype=np.int64)
    endo_sum = np.zeros(n_ck, dtype=np.int64)
    exo_sum = np.zeros(n_ck, dtype=np.int64)
    endo_sq = np.zeros(n_ck, dtype=np.int64)
    exo_sq = np.zeros(n_ck, dtype=np.int64)
    total = [e + x for e, x in zip(endo, exo)]
    p_up = [e / r if r > 0 else 0.0 for e, r in zip(endo, total)]
    cdf = np.cumsum(p0)
    cdf[-1] = 1.0
    cdf = cdf.tolist()
    t_last = checkpoints[-1]
    block = 64
    log = math.log
    for traj in range(start, stop):
        rng = np.random.default_rng([seed, traj])
        buf = rng.random(block).tolist()
        pos = 1
        u0 = buf[0]
        state = next(i for i, c in enumerate(cdf) if u0 < c)
        t = 0.0
        ne = nx = 0
        ck = 0
        while ck < n_ck:
            rate = total[state]
            if rate == 0.0:
                t_next = math.inf
            else:
                if pos + 2 > block:
                    buf = rng.random(block).tolist()
                    pos = 0
                t_next = t - log(1.0 - buf[pos]) / rate
                u_dir = buf[pos + 1]
                pos += 2
            while ck < n_ck and checkpoints[ck] < t_next:
                occ[ck, state] += 1
                endo_sum[ck] += ne
                exo_sum[ck] += nx
                endo_sq[ck] += ne * ne
                exo_sq[ck] += nx * nx
                ck += 1
            if t_next > t_last:
                break
            t = t_next
            if u_dir < p_up[state]:
                state -= 1
                ne += 1
            else:
                state += 1
                nx += 1
    return occ, endo_sum, exo_sum, endo_sq, exo_sq


def ssa_simulate(Q, p0, checkpoints, n_traj, seed=None, n_jobs=1):
    """Exact jump-process (Gillespie) sampling of the rate model.

    Trajectory ``k`` draws from ``numpy.random.default_rng([seed, k])``, so
    results do not depend on how trajectories are split across workers.
    Aggregates are integer sums and therefore order-independent.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    checkpoints = np.asarray(checkpoints, dtype=float)
    if checkpoints.ndim != 1 or checkpoints.size == 0:
        raise ValueError("need at least one checkpoint")
    if np.any(checkpoints < 0) or np.any(np.diff(checkpoints) < 0):
        raise ValueError("checkpoints must be sorted and nonnegative")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    seed = int(seed)
    vec = _as_vector(p0)
    args = (Q.endo.tolist(), Q.exo.tolist(), vec, checkpoints.tolist(), seed)

    if n_jobs is None or n_jobs <= 1 or n_traj < 2 * n_jobs:
        parts = [_sample_chunk(*args, 0, n_traj)]
    else:
        bounds = np.linspace(0, n_traj, n_jobs + 1).astype(int)
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_sample_chunk, *args, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
            parts = [f.result() for f in futures]
    occ, es, xs, eq, xq = (sum(p[k] for p in parts) for k in range(5))

    n = float(n_traj)
    mean_e = es / n
    mean_x = xs / n
    denom = max(n - 1.0, 1.0)
    var_e = np.maximum(eq - n * mean_e**2, 0.0) / denom
    var_x = np.maximum(xq - n * mean_x**2, 0.0) / denom
    return SsaResult(
        n_trajectories=n_traj,
        checkpoints=checkpoints,
        distributions=occ / n,
        mean_endo=mean_e,
        mean_exo=mean_x,
        sem_endo=np.sqrt(var_e / n),
        sem_exo=np.sqrt(var_x / n),
        rng_seed=seed,
        occupancy=occ,
    )
