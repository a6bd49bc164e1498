"""Chi-square extraction of spin temperature or spin field from populations."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from sklearn.base import BaseEstimator

from ._validation import check_populations, check_sigma, check_theta_range
from .exceptions import EstimationError, TableFormatError
from .states import MF_VALUES, N_STATES, state_index

NU = 7


@dataclass(frozen=True, eq=False)
class MeasuredPopulations:
    """Measured populations (m_F = +3 ... -3) and their 1-sigma errors.

    The populations need not sum exactly to one.
    """

    p_exp: np.ndarray
    sigma_exp: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_exp", check_populations(self.p_exp))
        object.__setattr__(self, "sigma_exp", check_sigma(self.sigma_exp))


def chi2_nu(data, model, nu=NU):
    """Reduced chi-square ``(1/nu) sum (P_exp - P_theo)^2 / sigma^2``."""
    resid = (data.p_exp - np.asarray(model, dtype=float)) / data.sigma_exp
    return float(resid @ resid) / nu


@dataclass(frozen=True, eq=False)
class EstimateResult:
    """Best-fit parameter with its ``chi2_min + delta`` interval.

    ``err_minus`` and ``err_plus`` are the interval endpoints (not widths).
    ``clamped_low``/``clamped_high`` flag sides where the threshold was not
    crossed inside the scan range.
    """

    theta_hat: float
    err_minus: float
    err_plus: float
    chi2_min: float
    chi2_curve: np.ndarray = field(repr=False)
    clamped_low: bool = False
    clamped_high: bool = False
    delta_chi2: float = 1.0

    @property
    def lower_error(self):
        return self.theta_hat - self.err_minus

    @property
    def upper_error(self):
        return self.err_plus - self.theta_hat

    def covers(self, theta):
        return self.err_minus <= theta <= self.err_plus


def _grid(lo, hi, n, scale):
    if scale == "log":
        if lo <= 0:
            raise ValueError("log-spaced scan needs a positive range")
        return np.geomspace(lo, hi, n)
    if scale == "linear":
        return np.linspace(lo, hi, n)
    raise ValueError(f"scale must be 'log' or 'linear', got {scale!r}")


def estimate(
    data,
    model_map,
    theta_range,
    *,
    scale="log",
    n_grid=64,
    rtol=1e-4,
    convention="reduced",
    nu=NU,
):
    """Minimize ``chi2_nu(theta)`` and bracket the 1-sigma interval.

    A coarse scan locates the minimum, golden-section search refines it, and
    bisection finds where the curve rises by one unit of the reduced statistic
    (``convention="reduced"``) or of the unreduced one (``"unreduced"``, a
    rise of ``1/nu`` in the reduced statistic).

    Raises
    ------
    EstimationError
        If the scan minimum sits at an end of ``theta_range``.
    """
    lo, hi = check_theta_range(theta_range)
    if n_grid < 3:
        raise ValueError("n_grid must be >= 3")
    if convention == "reduced":
        delta = 1.0
    elif convention == "unreduced":
        delta = 1.0 / nu
    else:
        raise ValueError(f"convention must be 'reduced' or 'unreduced', got {convention!r}")

    cache = {}

    def chi2(theta):
        key = float(theta)
        if key not in cache:
            cache[key] = chi2_nu(data, model_map(key), nu=nu)
        return cache[key]

    grid = _grid(lo, hi, n_grid, scale)
    values = np.array([chi2(t) for t in grid])
    k = int(np.argmin(values))
    if k == 0 or k == n_grid - 1:
        raise EstimationError(
            f"minimum not bracketed: scan minimum at range end theta={grid[k]:.6g}"
        )

    a, c = grid[k - 1], grid[k + 1]
    # relative tolerance well inside rtol so the returned point meets it
    try:
        res = optimize.minimize_scalar(chi2, bracket=(a, grid[k], c), method="golden", tol=rtol * 1e-2)
    except ValueError:
        # ties on the coarse grid do not form a strict bracket
        res = optimize.minimize_scalar(
            chi2, bounds=(a, c), method="bounded", options={"xatol": rtol * 1e-2 * abs(grid[k])}
        )
    theta_hat = float(res.x)
    chi2_min = chi2(theta_hat)
    if not lo <= theta_hat <= hi:
        raise EstimationError("golden-section search left the scan range")
    target = chi2_min + delta

    def crossing(direction):
        idx = np.arange(k - 1, -1, -1) if direction < 0 else np.arange(k + 1, n_grid)
        prev = theta_hat
        for i in idx:
            if values[i] >= target:
                return optimize.bisect(
                    lambda t: chi2(t) - target,
                    min(prev, grid[i]),
                    max(prev, grid[i]),
                    xtol=rtol * abs(theta_hat) * 1e-2,
                ), False
            prev = grid[i]
        return (grid[0] if direction < 0 else grid[-1]), True

    err_minus, clamped_low = crossing(-1)
    err_plus, clamped_high = crossing(+1)
    curve = np.array(sorted(cache.items()))
    return EstimateResult(
        theta_hat=theta_hat,
        err_minus=float(err_minus),
        err_plus=float(err_plus),
        chi2_min=float(chi2_min),
        chi2_curve=curve,
        clamped_low=clamped_low,
        clamped_high=clamped_high,
        delta_chi2=delta,
    )


def systematic_field_shift(data, model_map2, T_range, B0, dB=2e-7, **kwargs):
    """Half the spread of the temperature estimate when the field is set to
    ``B0 - dB``, ``B0`` and ``B0 + dB``; in K.

    ``model_map2(T, B)`` returns the model populations.
    """
    if dB == 0:
        return 0.0
    fits = [
        estimate(data, lambda T, B=B: model_map2(T, B), T_range, **kwargs).theta_hat
        for B in (B0 - dB, B0, B0 + dB)
    ]
    return 0.5 * (max(fits) - min(fits))


@dataclass(frozen=True, eq=False)
class CoverageReport:
    n_repetitions: int
    n_covered: int
    n_failed: int
    estimates: np.ndarray

    @property
    def coverage(self):
        ok = self.n_repetitions - self.n_failed
        return self.n_covered / ok if ok else math.nan


def coverage_study(model_map, theta_star, sigma_exp, theta_range, n_rep=200, seed=0, **kwargs):
    """Monte Carlo frequency with which the interval covers ``theta_star``.

    Data are the model populations at ``theta_star`` plus Gaussian noise of
    standard deviation ``sigma_exp``. Repetitions whose minimum falls outside
    the range are counted in ``n_failed``.
    """
    sigma = check_sigma(sigma_exp)
    memo = {}

    def cached_map(theta):
        # the coarse scan hits the same grid on every repetition
        if theta not in memo:
            memo[theta] = np.asarray(model_map(theta), dtype=float)
        return memo[theta]

    truth = cached_map(float(theta_star))
    rng = np.random.default_rng(seed)
    covered = failed = 0
    estimates = []
    for _ in range(n_rep):
        noisy = MeasuredPopulations(np.clip(truth + rng.normal(0.0, sigma), 0.0, 1.0), sigma)
        try:
            res = estimate(noisy, cached_map, theta_range, **kwargs)
        except EstimationError:
            failed += 1
            estimates.append(math.nan)
            continue
        estimates.append(res.theta_hat)
        covered += res.covers(theta_star)
    return CoverageReport(n_rep, covered, failed, np.array(estimates))


def load_measurement(path):
    """Read a ``mF,p_exp,sigma_exp`` CSV with exactly one row per m_F."""
    p = np.full(N_STATES, np.nan)
    s = np.full(N_STATES, np.nan)
    seen = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["mF", "p_exp", "sigma_exp"]:
            raise TableFormatError("header must be mF,p_exp,sigma_exp", 1)
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != 3:
                raise TableFormatError(f"expected 3 fields, got {len(rec)}", lineno)
            try:
                m = int(rec[0])
                idx = state_index(m)
                pv, sv = float(rec[1]), float(rec[2])
            except ValueError as exc:
                raise TableFormatError(str(exc), lineno) from None
            if m in seen:
                raise TableFormatError(f"duplicate m_F={m} (first on row {seen[m]})", lineno)
            if not (0.0 <= pv <= 1.0) or not (sv > 0 and math.isfinite(sv)):
                raise TableFormatError("p_exp must be in [0, 1] and sigma_exp > 0", lineno)
            seen[m] = lineno
            p[idx], s[idx] = pv, sv
    missing = [m for m in MF_VALUES if m not in seen]
    if missing:
        raise TableFormatError(f"missing rows for m_F = {missing}")
    return MeasuredPopulations(p, s)


class ChiSquareEstimator(BaseEstimator):
    """Scikit-learn style wrapper around :func:`estimate`.

    Parameters
    ----------
    model_map : callable
        ``theta -> populations`` (SpinDistribution or length-7 array).
    theta_range : tuple of float
        Scan interval in SI units.
    scale : {"log", "linear"}
        Spacing of the coarse scan; log for temperatures, linear for fields.
    n_grid : int
    rtol : float
    convention : {"reduced", "unreduced"}

    Attributes
    ----------
    result_ : EstimateResult
    theta_ : float
    """

    def __init__(self, model_map=None, theta_range=None, scale="log", n_grid=64, rtol=1e-4, convention="reduced"):
        self.model_map = model_map
        self.theta_range = theta_range
        self.scale = scale
        self.n_grid = n_grid
        self.rtol = rtol
        self.convention = convention

    def _estimate(self, data):
        if self.model_map is None or self.theta_range is None:
            raise ValueError("model_map and theta_range must be set")
        return estimate(
            data,
            self.model_map,
            self.theta_range,
            scale=self.scale,
            n_grid=self.n_grid,
            rtol=self.rtol,
            convention=self.convention,
        )

    def fit(self, X, sigma):
        """Fit one measurement: ``X`` holds the seven populations, ``sigma`` their errors."""
        self.result_ = self._estimate(MeasuredPopulations(X, sigma))
        self.theta_ = self.result_.theta_hat
        return self

    def predict(self, X, sigma):
        """Estimate for each row of ``X`` (shape ``(n, 7)``) independently."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        S = np.broadcast_to(np.asarray(sigma, dtype=float), X.shape)
        return np.array([self._estimate(MeasuredPopulations(x, s)).theta_hat for x, s in zip(X, S)])

    def score(self, X, sigma):
        """Negative reduced chi-square of the fitted model on a measurement."""
        if not hasattr(self, "theta_"):
            raise AttributeError("estimator is not fitted")
        return -chi2_nu(MeasuredPopulations(X, sigma), self.model_map(self.theta_))
