"""Input checks shared by the estimators."""
import numpy as np

from .states import N_STATES


def check_populations(p):
    arr = np.array(p, dtype=float).reshape(-1)
    if arr.shape != (N_STATES,):
        raise ValueError(f"expected {N_STATES} populations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("populations must be finite")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("populations must lie in [0, 1]")
    arr.setflags(write=False)
    return arr


def check_sigma(sigma):
    arr = np.array(sigma, dtype=float).reshape(-1)
    if arr.size == 1:
        arr = np.full(N_STATES, arr[0])
    if arr.shape != (N_STATES,):
        raise ValueError(f"expected {N_STATES} uncertainties, got {arr.size}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("uncertainties must be finite and > 0")
    arr.setflags(write=False)
    return arr


def check_theta_range(theta_range):
    lo, hi = (float(x) for x in theta_range)
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise ValueError(f"invalid parameter range {theta_range!r}")
    return lo, hi
