"""Optimal single-photon storage in a homogeneously broadened resonant absorber.

Dimensionless mode is the default: times in units of ``T2`` and depths in
units of ``L``, so the optical depth ``alpha L`` is the only parameter.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DomainError,
    EdgeLeakageWarning,
    EmptyWindowWarning,
    GridError,
    PhotonMemoryError,
    SeriesTruncationWarning,
    SingularMediumError,
    ThinSliceWarning,
    TruncatedPulseWarning,
)
from .medium import Kernel, MediumParams, g_of, norm_const, transfer_thick
from .optimal_pulse import (
    OptimalPulseSpec,
    analytic_output,
    build_optimal,
    gamma_asymptotic,
    gamma_on_grid,
    gamma_series,
)
from .propagation_metrics import (
    ExcitationProfile,
    MetricsReport,
    absorption_probability,
    atomic_amplitude,
    atomic_amplitude_closed,
    efficiency,
    efficiency_asymptotic,
    field_at_zero_closed,
    first_burst_fraction,
    flatness_metrics,
    propagate,
    simulate,
)
from .signal_core import Signal, Spectrum, TimeGrid, default_grid, probability
from .slice_dynamics import SliceParams, cascade, slice_excitation, slice_output, thin_scatter

__all__ = [
    "__version__",
    "ConfigurationError",
    "DomainError",
    "EdgeLeakageWarning",
    "EmptyWindowWarning",
    "GridError",
    "PhotonMemoryError",
    "SeriesTruncationWarning",
    "SingularMediumError",
    "ThinSliceWarning",
    "TruncatedPulseWarning",
    "Kernel",
    "MediumParams",
    "g_of",
    "norm_const",
    "transfer_thick",
    "OptimalPulseSpec",
    "analytic_output",
    "build_optimal",
    "gamma_asymptotic",
    "gamma_on_grid",
    "gamma_series",
    "ExcitationProfile",
    "MetricsReport",
    "absorption_probability",
    "atomic_amplitude",
    "atomic_amplitude_closed",
    "efficiency",
    "efficiency_asymptotic",
    "field_at_zero_closed",
    "first_burst_fraction",
    "flatness_metrics",
    "propagate",
    "simulate",
    "Signal",
    "Spectrum",
    "TimeGrid",
    "default_grid",
    "probability",
    "SliceParams",
    "cascade",
    "slice_excitation",
    "slice_output",
    "thin_scatter",
]
