"""Quasi-spin states of the probe and the Zeeman energy ladder.

Populations are stored in a fixed order, m_F = +3 first and m_F = -3 last,
so that array index ``i`` corresponds to ``m_F = 3 - i``.
"""
from dataclasses import dataclass

import numpy as np

from .constants import G_F_PROBE, MU_B

N_STATES = 7
MF_VALUES = (3, 2, 1, 0, -1, -2, -3)
MF_LABELS = tuple(f"{m:+d}" if m else "0" for m in MF_VALUES)

NORMALIZATION_TOL = 1e-9


def check_mF(m_F):
    """Validate a quasi-spin quantum number and return it as ``int``."""
    if isinstance(m_F, (bool, np.bool_)):
        raise TypeError("m_F must be an integer")
    if isinstance(m_F, (float, np.floating)):
        if not float(m_F).is_integer():
            raise ValueError(f"m_F must be an integer, got {m_F}")
    m = int(m_F)
    if abs(m) > 3:
        raise ValueError(f"|m_F| must be <= 3, got {m}")
    return m


def state_index(m_F):
    return 3 - check_mF(m_F)


class SpinDistribution:
    """Normalized populations of the seven quasi-spin states.

    Parameters
    ----------
    p : array_like, shape (7,)
        Populations ordered from m_F = +3 down to m_F = -3.

    Negative entries are rejected. A total that differs from one by less
    than ``1e-9`` is renormalized; anything larger raises ``ValueError``.
    """

    __slots__ = ("_p",)

    def __init__(self, p):
        arr = np.array(p, dtype=float).reshape(-1)
        if arr.shape != (N_STATES,):
            raise ValueError(f"expected {N_STATES} populations, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("populations must be finite")
        if np.any(arr < 0):
            raise ValueError(f"populations must be nonnegative, got {arr}")
        total = arr.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"populations sum to {total!r}, not 1")
        if total != 1.0:
            arr = arr / total
        arr.setflags(write=False)
        self._p = arr

    @classmethod
    def delta(cls, m_F):
        p = np.zeros(N_STATES)
        p[state_index(m_F)] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls):
        return cls(np.full(N_STATES, 1.0 / N_STATES))

    @property
    def p(self):
        return self._p

    def population(self, m_F):
        return float(self._p[state_index(m_F)])

    def as_dict(self):
        return {m: float(v) for m, v in zip(MF_VALUES, self._p)}

    def total_variation(self, other):
        return 0.5 * float(np.abs(self._p - np.asarray(other, dtype=float)).sum())

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._p.copy()
        return self._p.astype(dtype)

    def __len__(self):
        return N_STATES

    def __iter__(self):
        return iter(self._p.tolist())

    def __getitem__(self, i):
        return self._p[i]

    def __eq__(self, other):
        if not isinstance(other, SpinDistribution):
            return NotImplemented
        return bool(np.array_equal(self._p, other._p))

    def __hash__(self):
        return hash(self._p.tobytes())

    def __repr__(self):
        body = ", ".join(f"{lab}: {v:.4g}" for lab, v in zip(MF_LABELS, self._p))
        return f"SpinDistribution({body})"


def zeeman_half_splitting(B):
    """Zeeman step ``dE/2 = g_F mu_B B`` of the probe, in J, for a field in T."""
    if np.any(np.asarray(B) < 0):
        raise ValueError("magnetic field must be nonnegative")
    return G_F_PROBE * MU_B * B


def endoergic_threshold(B):
    """Kinetic energy an endoergic collision must supply; ``mu_B B / 4``."""
    return zeeman_half_splitting(B)


@dataclass(frozen=True)
class ZeemanLadder:
    half_step: float
    level_energy: np.ndarray

    def energy(self, m_F):
        return float(self.level_energy[state_index(m_F)])


def level_energies(B):
    """Level energies ``E_mF = (3 - m_F) dE/2`` with the m_F = +3 level at zero."""
    half = float(zeeman_half_splitting(B))
    levels = np.arange(N_STATES, dtype=float) * half
    levels.setflags(write=False)
    return ZeemanLadder(half_step=half, level_energy=levels)
