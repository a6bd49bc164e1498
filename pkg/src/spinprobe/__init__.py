"""Spin-exchange quantum probe: rate-model dynamics, thermometry and magnetometry.

A single Cs atom in the F=3 manifold exchanges spin with a thermal Rb bath.
The package computes thermally averaged spin-exchange rates, propagates the
seven-level population model, and extracts temperature or magnetic field from
measured populations.
"""
__version__ = "0.1.0"

from .collisions import endoergic_fraction, endoergic_fraction_numeric, mb_pdf, thermal_average_sigma
from .config import RunConfig, load_config, parse_config
from .constants import CONSTANTS
from .cross_sections import (
    ALL_CHANNELS,
    CollisionChannel,
    CrossSectionTable,
    Direction,
    SyntheticCrossSections,
    TabulatedCrossSections,
    load_tables,
    query_sigma,
    save_tables,
)
from .dynamics import (
    RateMatrix,
    SsaResult,
    TimeTrace,
    build_rate_matrix,
    detailed_balance_residuals,
    evolve_trace,
    exact_counts,
    population_map,
    propagate,
    ssa_simulate,
    steady_state,
    steady_state_from_sigmas,
)
from .estimation import (
    ChiSquareEstimator,
    EstimateResult,
    MeasuredPopulations,
    chi2_nu,
    coverage_study,
    estimate,
    load_measurement,
    systematic_field_shift,
)
from .exceptions import (
    ConfigError,
    EstimationError,
    MissingChannelError,
    NumericalError,
    QuadratureError,
    RangeError,
    SpinProbeError,
    SteadyStateError,
    TableFormatError,
)
from .observables import (
    bures_distance,
    energy_variance,
    entropy,
    entropy_vs_collisions,
    fisher_sqrt,
    mean_energy,
    observables,
    sensitivity_trace,
)
from .states import MF_VALUES, SpinDistribution, level_energies, zeeman_half_splitting
from .trap import BathSpec, ProbeSpec, density_overlap, three_body_rate

__all__ = [
    "ALL_CHANNELS",
    "BathSpec",
    "CONSTANTS",
    "ChiSquareEstimator",
    "CollisionChannel",
    "ConfigError",
    "CrossSectionTable",
    "Direction",
    "EstimateResult",
    "EstimationError",
    "MF_VALUES",
    "MeasuredPopulations",
    "MissingChannelError",
    "NumericalError",
    "ProbeSpec",
    "QuadratureError",
    "RangeError",
    "RateMatrix",
    "RunConfig",
    "SpinDistribution",
    "SpinProbeError",
    "SsaResult",
    "SteadyStateError",
    "SyntheticCrossSections",
    "TableFormatError",
    "TabulatedCrossSections",
    "TimeTrace",
    "build_rate_matrix",
    "bures_distance",
    "chi2_nu",
    "coverage_study",
    "density_overlap",
    "detailed_balance_residuals",
    "endoergic_fraction",
    "endoergic_fraction_numeric",
    "energy_variance",
    "entropy",
    "entropy_vs_collisions",
    "estimate",
    "evolve_trace",
    "exact_counts",
    "fisher_sqrt",
    "level_energies",
    "load_config",
    "load_measurement",
    "load_tables",
    "mb_pdf",
    "mean_energy",
    "observables",
    "parse_config",
    "population_map",
    "propagate",
    "query_sigma",
    "save_tables",
    "sensitivity_trace",
    "ssa_simulate",
    "steady_state",
    "steady_state_from_sigmas",
    "systematic_field_shift",
    "thermal_average_sigma",
    "three_body_rate",
    "zeeman_half_splitting",
]
