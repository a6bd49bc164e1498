"""Run configuration: JSON documents in laboratory units, validated into SI objects.

Example::

    {
      "bath": {"n_rb": 7000, "temperature_nK": 400, "omega_r_Hz": 330, "omega_z_Hz": 50},
      "probe": {"n_cs": 1, "initial_mF": 2, "trap_scale": 1.0},
      "field_mG": 10,
      "cross_sections": {"mode": "synthetic", "sigma0_exo_cm2": 2e-11,
                         "sigma0_endo_cm2": 2e-11, "threshold_exponent": 0.5},
      "time": {"t_max_s": 3.0, "n_points": 301},
      "seed": 1
    }

Trap frequencies are ordinary frequencies (the angular frequency is
``2 pi`` times the value).
"""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import CM2, CM6, MILLIGAUSS, NANOKELVIN
from .cross_sections import ALL_CHANNELS, DEFAULT_SIGMA0, SyntheticCrossSections, load_tables
from .exceptions import ConfigError
from .trap import BathSpec, ProbeSpec

DEFAULT_L3_CM6 = 28e-26  # Hz cm^6, Rb-Rb-Cs

_SECTIONS = {"bath", "probe", "field_mG", "cross_sections", "time", "seed", "l3_cm6_per_s"}


def _number(section, key, path, default=None, *, positive=False, nonnegative=False, integer=False):
    full = f"{path}.{key}" if path else key
    if key not in section:
        if default is None:
            raise ConfigError(full, "required field missing")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(full, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(full, "must be finite")
    if integer and float(value) != int(value):
        raise ConfigError(full, "must be an integer")
    if positive and not value > 0:
        raise ConfigError(full, "must be > 0")
    if nonnegative and not value >= 0:
        raise ConfigError(full, "must be >= 0")
    return int(value) if integer else float(value)


def _section(doc, key, required=True):
    if key not in doc:
        if required:
            raise ConfigError(key, "required section missing")
        return {}
    sec = doc[key]
    if not isinstance(sec, dict):
        raise ConfigError(key, "expected an object")
    return sec


def _reject_unknown(section, allowed, path):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")


@dataclass(frozen=True)
class CrossSectionConfig:
    mode: str = "synthetic"
    path: str = None
    sigma0_exo_cm2: float = DEFAULT_SIGMA0 / CM2
    sigma0_endo_cm2: float = DEFAULT_SIGMA0 / CM2
    threshold_exponent: float = 0.5
    channels: dict = field(default_factory=dict)

    def provider(self, base_dir=None):
        if self.mode == "table":
            path = Path(self.path)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return load_tables(path)
        overrides = {ch: v * CM2 for ch, v in self.channels.items()}
        return SyntheticCrossSections(
            sigma0_exo=self.sigma0_exo_cm2 * CM2,
            sigma0_endo=self.sigma0_endo_cm2 * CM2,
            threshold_exponent=self.threshold_exponent,
            overrides=overrides,
        )


@dataclass(frozen=True)
class RunConfig:
    bath: BathSpec
    probe: ProbeSpec
    field: float  # T
    cross_sections: CrossSectionConfig
    t_max: float = 3.0
    n_points: int = 301
    seed: int = None
    l3: float = DEFAULT_L3_CM6 * CM6  # m^6/s
    base_dir: str = None

    @property
    def times(self):
        return np.linspace(0.0, self.t_max, self.n_points)

    @property
    def temperature(self):
        return self.bath.temperature

    def provider(self):
        return self.cross_sections.provider(self.base_dir)


def _parse_channel_key(key, path):
    # "endo:+2" / "exo:-1"
    try:
        direction, mf = key.split(":")
        ch = next(c for c in ALL_CHANNELS if c.direction.value == direction and c.initial_mF == int(mf))
    except (ValueError, StopIteration):
        raise ConfigError(f"{path}.{key}", "channel keys look like 'endo:+2' or 'exo:-1'") from None
    return ch


def parse_config(doc, base_dir=None):
    """Validate a configuration mapping; errors carry the offending field path."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be an object")
    _reject_unknown(doc, _SECTIONS, "")

    bath_doc = _section(doc, "bath")
    _reject_unknown(bath_doc, {"n_rb", "temperature_nK", "omega_r_Hz", "omega_z_Hz"}, "bath")
    bath = BathSpec(
        n_rb=_number(bath_doc, "n_rb", "bath", positive=True),
        temperature=_number(bath_doc, "temperature_nK", "bath", positive=True) * NANOKELVIN,
        omega_r=2 * math.pi * _number(bath_doc, "omega_r_Hz", "bath", 330.0, positive=True),
        omega_z=2 * math.pi * _number(bath_doc, "omega_z_Hz", "bath", 50.0, positive=True),
    )

    probe_doc = _section(doc, "probe", required=False)
    _reject_unknown(probe_doc, {"n_cs", "initial_mF", "trap_scale"}, "probe")
    mf = _number(probe_doc, "initial_mF", "probe", 2, integer=True)
    if abs(mf) > 3:
        raise ConfigError("probe.initial_mF", "must lie in [-3, 3]")
    probe = ProbeSpec(
        n_cs=_number(probe_doc, "n_cs", "probe", 1, integer=True, positive=True),
        initial_mF=mf,
        trap_scale=_number(probe_doc, "trap_scale", "probe", 1.0, positive=True),
    )

    field_T = _number(doc, "field_mG", "", nonnegative=True) * MILLIGAUSS

    cs_doc = _section(doc, "cross_sections", required=False)
    _reject_unknown(
        cs_doc,
        {"mode", "path", "sigma0_exo_cm2", "sigma0_endo_cm2", "threshold_exponent", "channels"},
        "cross_sections",
    )
    mode = cs_doc.get("mode", "synthetic")
    if mode not in ("synthetic", "table"):
        raise ConfigError("cross_sections.mode", "must be 'synthetic' or 'table'")
    if mode == "table":
        path = cs_doc.get("path")
        if not isinstance(path, str) or not path:
            raise ConfigError("cross_sections.path", "required for mode 'table'")
        cs = CrossSectionConfig(mode="table", path=path)
    else:
        channels_doc = cs_doc.get("channels", {})
        if not isinstance(channels_doc, dict):
            raise ConfigError("cross_sections.channels", "expected an object")
        channels = {}
        for key in channels_doc:
            ch = _parse_channel_key(key, "cross_sections.channels")
            channels[ch] = _number(channels_doc, key, "cross_sections.channels", nonnegative=True)
        default = DEFAULT_SIGMA0 / CM2
        cs = CrossSectionConfig(
            mode="synthetic",
            sigma0_exo_cm2=_number(cs_doc, "sigma0_exo_cm2", "cross_sections", default, nonnegative=True),
            sigma0_endo_cm2=_number(cs_doc, "sigma0_endo_cm2", "cross_sections", default, nonnegative=True),
            threshold_exponent=_number(cs_doc, "threshold_exponent", "cross_sections", 0.5, nonnegative=True),
            channels=channels,
        )

    time_doc = _section(doc, "time", required=False)
    _reject_unknown(time_doc, {"t_max_s", "n_points"}, "time")
    t_max = _number(time_doc, "t_max_s", "time", 3.0, positive=True)
    n_points = _number(time_doc, "n_points", "time", 301, integer=True)
    if n_points < 2:
        raise ConfigError("time.n_points", "must be >= 2")

    seed = None
    if "seed" in doc:
        seed = _number(doc, "seed", "", integer=True, nonnegative=True)
    l3 = _number(doc, "l3_cm6_per_s", "", DEFAULT_L3_CM6, nonnegative=True) * CM6

    return RunConfig(
        bath=bath,
        probe=probe,
        field=field_T,
        cross_sections=cs,
        t_max=t_max,
        n_points=n_points,
        seed=seed,
        l3=l3,
        base_dir=None if base_dir is None else str(base_dir),
    )


def load_config(path):
    path = Path(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(doc, base_dir=path.parent)
