"""Interval-schedule flexibility distribution and delay-robustness experiments."""
from flexsched.instance import (
    Instance,
    InvalidInstanceError,
    TemporalProfile,
    predecessor_counts,
    successor_counts,
    temporal_profile,
    topological_order,
    validate,
)
from flexsched.flex import IntervalSchedule, canonicalize, check_feasible, total_flexibility, zero_count
from flexsched.kernels import BACKEND
from flexsched.simulate import DelayParams, execute, monte_carlo, sample_scenario
from flexsched.strategies import Strategy, distribute, distribute_detailed, weights

__all__ = [
    "BACKEND",
    "DelayParams",
    "Instance",
    "IntervalSchedule",
    "InvalidInstanceError",
    "Strategy",
    "TemporalProfile",
    "canonicalize",
    "check_feasible",
    "distribute",
    "distribute_detailed",
    "execute",
    "monte_carlo",
    "predecessor_counts",
    "sample_scenario",
    "successor_counts",
    "temporal_profile",
    "topological_order",
    "total_flexibility",
    "validate",
    "weights",
    "zero_count",
]
__version__ = "0.1.0"
