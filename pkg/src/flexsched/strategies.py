"""Flexibility distribution strategies.

Each strategy composes the optimisation stages in :mod:`flexsched.optim` and
returns the earliest placement of the resulting flexibilities.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from flexsched.flex import IntervalSchedule, canonicalize, max_task_flexibility
from flexsched.instance import Instance, predecessor_counts, successor_counts, temporal_profile
from flexsched.optim import (
    EqualiseSpec,
    FeasibleSet,
    solve_equalise,
    solve_max_min_flex,
    solve_max_total_flex,
)

KINDS = ("maximal", "equalised", "wpre", "wpreN", "wallpre", "wsucc", "max_minflex", "wsucc_minflex")
WEIGHTED = {"wpre", "wpreN", "wallpre", "wsucc", "wsucc_minflex"}
DEFAULT_STRATEGIES = ("maximal", "equalised", "wpre", "wpre5", "wallpre", "wsucc", "max_minflex", "wsucc_minflex")


@dataclass(frozen=True)
class Strategy:
    kind: str
    n: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "wpreN" and (self.n is None or self.n < 1):
            raise ValueError("wpreN needs n >= 1")

    @property
    def name(self) -> str:
        return f"wpre{self.n}" if self.kind == "wpreN" else self.kind

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        m = re.fullmatch(r"wpre(\d+)", name)
        if m:
            return cls("wpreN", int(m.group(1)))
        if name == "wpreN" or name not in KINDS:
            raise ValueError(f"unknown strategy {name!r}")
        return cls(name)

    def __str__(self) -> str:
        return self.name


def weights(strategy: Strategy, instance: Instance) -> np.ndarray:
    """``1 + count`` with the count chosen by the strategy kind."""
    kind = strategy.kind
    if kind == "wpre":
        count = predecessor_counts(instance, "direct")
    elif kind == "wpreN":
        count = predecessor_counts(instance, "distance", strategy.n)
    elif kind == "wallpre":
        count = predecessor_counts(instance, "transitive")
    elif kind in ("wsucc", "wsucc_minflex"):
        count = successor_counts(instance)
    else:
        raise ValueError(f"{strategy.name} is not a weighted strategy")
    return 1.0 + count.astype(np.float64)


@dataclass
class Distribution:
    strategy: Strategy
    schedule: IntervalSchedule
    deadline: float
    stages: dict[str, float] = field(default_factory=dict)

    @property
    def flex(self) -> np.ndarray:
        return self.schedule.flex


def distribute_detailed(
    strategy: Strategy | str,
    instance: Instance,
    deadline_factor: float = 1.1,
    weight_form: str = "multiply",
) -> Distribution:
    """Run ``strategy`` and keep the intermediate stage values.

    ``weight_form="divide"`` uses ``1 / w`` as the loss weights instead of
    ``w``, for comparing the two readings of the weighted objective.
    """
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    profile = temporal_profile(instance, deadline_factor)
    fs = FeasibleSet(instance, profile.deadline)
    targets = max_task_flexibility(profile)
    ones = np.ones(instance.n_tasks)
    stages: dict[str, float] = {}
    kind = strategy.kind

    def loss_weights():
        w = weights(strategy, instance)
        return w if weight_form == "multiply" else 1.0 / w

    if kind == "equalised":
        f = solve_equalise(fs, EqualiseSpec(targets, ones))
    elif kind in ("wpre", "wpreN", "wallpre", "wsucc"):
        f = solve_equalise(fs, EqualiseSpec(targets, loss_weights()))
    elif kind == "maximal":
        total, _ = solve_max_total_flex(fs)
        stages["max_total"] = total
        f = solve_equalise(fs, EqualiseSpec(targets, ones, total_flex_equals=total))
    elif kind == "max_minflex":
        phi, _ = solve_max_min_flex(fs)
        total, _ = solve_max_total_flex(fs, lower_bound=phi)
        stages.update(max_min=phi, max_total=total)
        f = solve_equalise(fs, EqualiseSpec(targets, ones, lower_bound=phi, total_flex_equals=total))
    elif kind == "wsucc_minflex":
        phi, _ = solve_max_min_flex(fs)
        stages["max_min"] = phi
        f = solve_equalise(fs, EqualiseSpec(targets, loss_weights(), lower_bound=phi))
    else:  # pragma: no cover - guarded by Strategy
        raise AssertionError(kind)
    schedule = canonicalize(f, instance, profile.deadline)
    return Distribution(strategy, schedule, profile.deadline, stages)


def distribute(strategy: Strategy | str, instance: Instance, deadline_factor: float = 1.1) -> IntervalSchedule:
    return distribute_detailed(strategy, instance, deadline_factor).schedule
