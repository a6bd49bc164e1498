"""Spin-exchange cross sections for the twelve probe channels.

Two providers share one duck-typed interface (``channels``, ``sigma``,
``check_field``, ``energy_range``, ``breakpoints``):

* :class:`TabulatedCrossSections`, bilinear interpolation of tabulated
  ``sigma(B, E_c)`` loaded from CSV;
* :class:`SyntheticCrossSections`, a threshold-law stand-in for
  coupled-channel results.
"""
import csv
import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import CM2, K_B, MILLIGAUSS, NANOKELVIN
from .exceptions import MissingChannelError, RangeError, TableFormatError
from .states import check_mF, endoergic_threshold

CSV_COLUMNS = ("initial_mF", "direction", "B_mG", "Ec_nK", "sigma_cm2")


class Direction(str, enum.Enum):
    ENDO = "endo"
    EXO = "exo"


@dataclass(frozen=True, order=True)
class CollisionChannel:
    """Probe transition ``m_F -> m_F + 1`` (endoergic) or ``m_F -> m_F - 1``.

    The bath atom moves the opposite way, so total magnetization is kept.
    """

    initial_mF: int
    direction: Direction

    def __post_init__(self):
        object.__setattr__(self, "initial_mF", check_mF(self.initial_mF))
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.direction is Direction.ENDO and self.initial_mF > 2:
            raise ValueError("endoergic channel requires initial m_F <= +2")
        if self.direction is Direction.EXO and self.initial_mF < -2:
            raise ValueError("exoergic channel requires initial m_F >= -2")

    @property
    def is_endoergic(self):
        return self.direction is Direction.ENDO

    @property
    def probe_delta(self):
        return 1 if self.is_endoergic else -1

    @property
    def bath_delta(self):
        return -self.probe_delta

    @property
    def final_mF(self):
        return self.initial_mF + self.probe_delta

    def __str__(self):
        return f"{self.direction.value}({self.initial_mF:+d}->{self.final_mF:+d})"


ENDO_CHANNELS = tuple(CollisionChannel(m, Direction.ENDO) for m in range(-3, 3))
EXO_CHANNELS = tuple(CollisionChannel(m, Direction.EXO) for m in range(-2, 4))
ALL_CHANNELS = ENDO_CHANNELS + EXO_CHANNELS


def _locate(grid, x):
    """Cell index and fractional weight of ``x`` inside a sorted grid."""
    idx = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, len(grid) - 2)
    w = (x - grid[idx]) / (grid[idx + 1] - grid[idx])
    return idx, w


@dataclass(frozen=True)
class CrossSectionTable:
    """Tabulated ``sigma(B, E_c)`` of one channel, SI units.

    ``sigma`` has shape ``(len(B_grid), len(Ec_grid))``.
    """

    channel: CollisionChannel
    B_grid: np.ndarray
    Ec_grid: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        B = np.array(self.B_grid, dtype=float)
        E = np.array(self.Ec_grid, dtype=float)
        S = np.array(self.sigma, dtype=float)
        if B.ndim != 1 or E.ndim != 1 or B.size < 1 or E.size < 2:
            raise ValueError("need at least one field and two energies")
        if np.any(np.diff(B) <= 0) or np.any(np.diff(E) <= 0):
            raise ValueError("grids must be strictly increasing")
        if np.any(B < 0) or np.any(E < 0):
            raise ValueError("grids must be nonnegative")
        if S.shape != (B.size, E.size):
            raise ValueError(f"sigma has shape {S.shape}, expected {(B.size, E.size)}")
        if not np.all(np.isfinite(S)) or np.any(S < 0):
            raise ValueError("sigma must be finite and nonnegative")
        if self.channel.is_endoergic:
            below = E[None, :] <= endoergic_threshold(B)[:, None]
            if np.any(S[below] > 0):
                raise ValueError("threshold violation: endoergic sigma > 0 below mu_B B / 4")
        for arr in (B, E, S):
            arr.setflags(write=False)
        object.__setattr__(self, "B_grid", B)
        object.__setattr__(self, "Ec_grid", E)
        object.__setattr__(self, "sigma", S)

    def check_field(self, B):
        lo, hi = self.B_grid[0], self.B_grid[-1]
        if not lo <= B <= hi:
            raise RangeError(
                f"{self.channel}: B = {B / MILLIGAUSS:.6g} mG outside table "
                f"[{lo / MILLIGAUSS:.6g}, {hi / MILLIGAUSS:.6g}] mG"
            )

    def query(self, B, Ec):
        """Bilinear interpolation in (B, E_c); endoergic values vanish at threshold."""
        self.check_field(B)
        E = np.asarray(Ec, dtype=float)
        if np.any(E < self.Ec_grid[0]) or np.any(E > self.Ec_grid[-1]):
            raise RangeError(f"{self.channel}: collision energy outside tabulated range")
        if self.B_grid.size == 1:
            row = self.sigma[0]
        else:
            i, wb = _locate(self.B_grid, B)
            row = (1.0 - wb) * self.sigma[i] + wb * self.sigma[i + 1]
        j, we = _locate(self.Ec_grid, E)
        out = (1.0 - we) * row[j] + we * row[j + 1]
        if self.channel.is_endoergic:
            out = np.where(E <= endoergic_threshold(B), 0.0, out)
        return out if out.ndim else float(out)


class TabulatedCrossSections:
    """Provider backed by one :class:`CrossSectionTable` per channel."""

    def __init__(self, tables):
        self._tables = {}
        for table in tables:
            if table.channel in self._tables:
                raise ValueError(f"duplicate table for {table.channel}")
            self._tables[table.channel] = table

    @property
    def channels(self):
        return frozenset(self._tables)

    @property
    def tables(self):
        return dict(self._tables)

    def table(self, channel):
        try:
            return self._tables[channel]
        except KeyError:
            raise MissingChannelError(f"no cross-section table for {channel}") from None

    def check_field(self, channel, B):
        self.table(channel).check_field(B)

    def sigma(self, channel, B, Ec):
        return self.table(channel).query(B, Ec)

    def energy_range(self, channel, B):
        grid = self.table(channel).Ec_grid
        return float(grid[0]), float(grid[-1])

    def breakpoints(self, channel, B):
        return self.table(channel).Ec_grid


def query_sigma(provider, channel, B, Ec):
    return provider.sigma(channel, B, Ec)


@dataclass(frozen=True)
class SyntheticModel:
    """Threshold-law cross section: constant for exoergic channels,
    ``sigma0 * (1 - E_th / E_c) ** threshold_exponent`` above threshold for
    endoergic ones."""

    sigma0: float
    threshold_exponent: float = 0.5

    def __post_init__(self):
        if not self.sigma0 >= 0:
            raise ValueError("sigma0 must be >= 0")
        if not self.threshold_exponent >= 0:
            raise ValueError("threshold_exponent must be >= 0")


def synthetic_sigma(model, channel, B, Ec):
    E = np.asarray(Ec, dtype=float)
    if np.any(E < 0):
        raise ValueError("collision energy must be nonnegative")
    if not channel.is_endoergic:
        out = np.full(E.shape, model.sigma0)
    else:
        threshold = endoergic_threshold(B)
        above = E > threshold
        ratio = np.where(above, 1.0 - threshold / np.where(above, E, 1.0), 0.0)
        if model.threshold_exponent == 0:
            out = np.where(above, model.sigma0, 0.0)
        else:
            out = model.sigma0 * ratio ** model.threshold_exponent
    return out if out.ndim else float(out)


DEFAULT_SIGMA0 = 2e-11 * CM2


@dataclass(frozen=True)
class SyntheticCrossSections:
    """Synthetic provider covering all twelve channels at any field.

    ``overrides`` maps individual channels to their own ``sigma0`` (m^2).
    """

    sigma0_exo: float = DEFAULT_SIGMA0
    sigma0_endo: float = DEFAULT_SIGMA0
    threshold_exponent: float = 0.5
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        for ch in self.overrides:
            if ch not in ALL_CHANNELS:
                raise ValueError(f"unknown channel {ch!r}")
        # validates the parameters
        self.model(ALL_CHANNELS[0])
        self.model(ALL_CHANNELS[-1])

    @property
    def channels(self):
        return frozenset(ALL_CHANNELS)

    def model(self, channel):
        default = self.sigma0_endo if channel.is_endoergic else self.sigma0_exo
        return SyntheticModel(self.overrides.get(channel, default), self.threshold_exponent)

    def check_field(self, channel, B):
        if B < 0:
            raise RangeError("magnetic field must be nonnegative")

    def sigma(self, channel, B, Ec):
        return synthetic_sigma(self.model(channel), channel, B, Ec)

    def energy_range(self, channel, B):
        return 0.0, math.inf

    def breakpoints(self, channel, B):
        return ()


def tabulate(provider, channels, B_grid, Ec_grid):
    """Sample a provider on a grid, producing a tabulated provider."""
    B_grid = np.asarray(B_grid, dtype=float)
    Ec_grid = np.asarray(Ec_grid, dtype=float)
    tables = []
    for ch in channels:
        sig = np.array([provider.sigma(ch, b, Ec_grid) for b in B_grid], dtype=float)
        tables.append(CrossSectionTable(ch, B_grid, Ec_grid, sig))
    return TabulatedCrossSections(tables)


def _parse_float(text, row, name):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise TableFormatError(f"cannot parse {name}={text!r}", row) from None
    if not math.isfinite(value):
        raise TableFormatError(f"{name} must be finite", row)
    return value


def load_tables(path):
    """Read a cross-section CSV into a :class:`TabulatedCrossSections`.

    Columns (header required): ``initial_mF,direction,B_mG,Ec_nK,sigma_cm2``.
    Row numbers in errors count the header as row 1.
    """
    rows = defaultdict(dict)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise TableFormatError(f"header must be {','.join(CSV_COLUMNS)}", 1)
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(CSV_COLUMNS):
                raise TableFormatError(f"expected {len(CSV_COLUMNS)} fields, got {len(rec)}", lineno)
            mf_text, dir_text, b_text, e_text, s_text = (c.strip() for c in rec)
            try:
                channel = CollisionChannel(int(mf_text), Direction(dir_text))
            except ValueError as exc:
                raise TableFormatError(f"invalid channel ({exc})", lineno) from None
            b_mG = _parse_float(b_text, lineno, "B_mG")
            e_nK = _parse_float(e_text, lineno, "Ec_nK")
            s_cm2 = _parse_float(s_text, lineno, "sigma_cm2")
            if b_mG < 0 or e_nK < 0:
                raise TableFormatError("B_mG and Ec_nK must be nonnegative", lineno)
            if s_cm2 < 0:
                raise TableFormatError(f"negative cross section {s_cm2}", lineno)
            B = b_mG * MILLIGAUSS
            E = e_nK * NANOKELVIN * K_B
            if channel.is_endoergic and s_cm2 > 0 and E <= endoergic_threshold(B):
                raise TableFormatError(
                    f"threshold violation: endoergic sigma > 0 at Ec = {e_nK} nK "
                    f"<= mu_B B / 4 for B = {b_mG} mG",
                    lineno,
                )
            key = (b_mG, e_nK)
            if key in rows[channel]:
                raise TableFormatError(f"duplicate grid point {key} for {channel}", lineno)
            rows[channel][key] = (s_cm2, lineno)

    tables = []
    for channel in sorted(rows):
        entries = rows[channel]
        b_vals = sorted({k[0] for k in entries})
        e_vals = sorted({k[1] for k in entries})
        if len(e_vals) < 2:
            raise TableFormatError(f"{channel}: need at least two collision energies")
        sig = np.empty((len(b_vals), len(e_vals)))
        for i, b in enumerate(b_vals):
            for j, e in enumerate(e_vals):
                try:
                    sig[i, j] = entries[(b, e)][0]
                except KeyError:
                    raise TableFormatError(
                        f"{channel}: missing grid point B_mG={b}, Ec_nK={e}"
                    ) from None
        tables.append(
            CrossSectionTable(
                channel,
                np.array(b_vals) * MILLIGAUSS,
                np.array(e_vals) * NANOKELVIN * K_B,
                sig * CM2,
            )
        )
    return TabulatedCrossSections(tables)


def save_tables(provider, path):
    """Write a tabulated provider in the CSV format read by :func:`load_tables`."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for channel in sorted(provider.channels):
            t = provider.table(channel)
            for i, b in enumerate(t.B_grid):
                for j, e in enumerate(t.Ec_grid):
                    writer.writerow(
                        (
                            channel.initial_mF,
                            channel.direction.value,
                            format(b / MILLIGAUSS, ".17g"),
                            format(e / (NANOKELVIN * K_B), ".17g"),
                            format(t.sigma[i, j] / CM2, ".17g"),
                        )
                    )
