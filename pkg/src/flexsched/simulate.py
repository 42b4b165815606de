"""Delay scenarios, early-start execution and Monte-Carlo violation counts.

Each run draws from its own stream seeded by ``(master_seed, instance name,
run index)``, so results do not depend on evaluation order or on which
strategy is being simulated: all strategies of an instance see the same
delay scenarios.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from flexsched.flex import IntervalSchedule
from flexsched.instance import Instance
from flexsched import kernels

VIOLATION_TOL = 1e-9


@dataclass(frozen=True)
class DelayParams:
    p: float
    q: float
    runs: int = 150
    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if self.q < 0:
            raise ValueError(f"q must be >= 0, got {self.q}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


@dataclass(frozen=True)
class DelayScenario:
    delayed: np.ndarray  # sorted task ids
    extra: np.ndarray


@dataclass(frozen=True)
class ExecutionTrace:
    start: np.ndarray
    finish: np.ndarray
    violations: frozenset[int]


def _name_key(name: str) -> int:
    return int.from_bytes(hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest(), "little")


def run_rng(master_seed: int, instance_name: str, run_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence([master_seed % 2**64, _name_key(instance_name), run_index])
    return np.random.Generator(np.random.PCG64(seq))


def n_delayed(p: float, k: int) -> int:
    """``round(p * k)`` with halves rounded up."""
    return min(k, int(math.floor(p * k + 0.5 + 1e-9)))


def sample_scenario(instance: Instance, params: DelayParams, run_index: int) -> DelayScenario:
    l = instance.durations
    eligible = np.flatnonzero(l > 0)
    count = n_delayed(params.p, len(eligible))
    rng = run_rng(params.master_seed, instance.name, run_index)
    delayed = np.sort(rng.choice(eligible, size=count, replace=False)) if count else np.zeros(0, dtype=np.int64)
    extra = np.zeros(instance.n_tasks)
    extra[delayed] = params.q * l[delayed]
    return DelayScenario(delayed, extra)


def scenario_extras(instance: Instance, params: DelayParams) -> np.ndarray:
    """Stacked ``extra`` vectors of all runs, shape ``(runs, N)``."""
    return np.stack([sample_scenario(instance, params, r).extra for r in range(params.runs)])


def execute(schedule: IntervalSchedule, instance: Instance, scenario: DelayScenario, tol: float = VIOLATION_TOL) -> ExecutionTrace:
    """Start every task at its window start or when its last predecessor
    finishes, whichever is later."""
    start, finish = kernels.execute(
        instance.order, instance.pred_indptr, instance.pred_index, schedule.a, instance.durations, scenario.extra
    )
    late = finish > schedule.b + instance.durations + tol
    return ExecutionTrace(start, finish, frozenset(np.flatnonzero(late).tolist()))


@dataclass(frozen=True)
class MonteCarloResult:
    counts: np.ndarray
    mean: float
    variance: float

    @property
    def degenerate(self) -> bool:
        return len(self.counts) < 2


def summarize(counts: np.ndarray) -> MonteCarloResult:
    counts = np.asarray(counts, dtype=np.int64)
    mean = float(counts.sum()) / len(counts)
    var = float(np.var(counts, ddof=1)) if len(counts) > 1 else 0.0
    return MonteCarloResult(counts, mean, var)


def monte_carlo(
    schedule: IntervalSchedule,
    instance: Instance,
    params: DelayParams,
    extras: np.ndarray | None = None,
    tol: float = VIOLATION_TOL,
) -> MonteCarloResult:
    """Violation counts over ``params.runs`` independent scenarios.

    ``extras`` may carry precomputed :func:`scenario_extras` for reuse across
    strategies.
    """
    if extras is None:
        extras = scenario_extras(instance, params)
    counts = kernels.violation_counts(
        instance.order, instance.pred_indptr, instance.pred_index,
        schedule.a, schedule.b, instance.durations, extras, tol,
    )
    return summarize(counts)
