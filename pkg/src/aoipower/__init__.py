"""Average age of information under NACK-count power control over block fading."""

from .channel import (
    RAYLEIGH,
    ChannelModel,
    LinkConfig,
    failure_probability,
    power_for_failure_probability,
    rayleigh,
    sample_gain,
)
from .core import (
    ErrorProfile,
    PowerPolicy,
    SteadyState,
    average_aoi,
    average_aoi_constant_power,
    average_power,
    cycle_length_distribution,
    error_profile_from_policy,
    evaluate_policy,
    steady_state,
    transition_matrix,
)
from .errors import (
    AoIError,
    DegenerateProfileError,
    DivergentSeriesError,
    InfeasibleTauError,
    InsufficientCyclesError,
    InvalidInitError,
    InvalidRateError,
    NoCompleteCycleError,
    UnreachableEpsilonError,
)
from .optimize import (
    AnnealingConfig,
    OptimizationResult,
    anneal,
    onoff_power_for_tau,
    optimize_policy,
    optimize_onoff,
)
from .sim import SimConfig, SimReport, empirical_cycle_check, simulate

__version__ = "0.1.0"

__all__ = [
    "AnnealingConfig",
    "AoIError",
    "ChannelModel",
    "DegenerateProfileError",
    "DivergentSeriesError",
    "ErrorProfile",
    "InfeasibleTauError",
    "InsufficientCyclesError",
    "InvalidInitError",
    "InvalidRateError",
    "LinkConfig",
    "NoCompleteCycleError",
    "OptimizationResult",
    "PowerPolicy",
    "RAYLEIGH",
    "SimConfig",
    "SimReport",
    "SteadyState",
    "UnreachableEpsilonError",
    "anneal",
    "average_aoi",
    "average_aoi_constant_power",
    "average_power",
    "cycle_length_distribution",
    "empirical_cycle_check",
    "error_profile_from_policy",
    "evaluate_policy",
    "failure_probability",
    "onoff_power_for_tau",
    "optimize_onoff",
    "optimize_policy",
    "power_for_failure_probability",
    "rayleigh",
    "sample_gain",
    "simulate",
    "steady_state",
    "transition_matrix",
]
