"""Instance metrics, flexibility-distribution metrics and statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import betainc

from flexsched.flex import ZERO_TOL, IntervalSchedule
from flexsched.instance import Instance, predecessor_counts, successor_counts, temporal_profile


class DegenerateHorizon(ValueError):
    pass


class ConstantSeries(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class InstanceMetrics:
    avg_tight_width: float
    avg_filled_width: float
    natural_flex: float
    complexity: int


@dataclass(frozen=True)
class FlexMetrics:
    num_zeros: int
    flex_x_pred: float
    flex_x_succ: float
    total_flex: float


def _successor_est(instance: Instance, est: np.ndarray, makespan: float) -> np.ndarray:
    """Earliest successor start per task; sinks get the makespan."""
    out = np.full(instance.n_tasks, makespan)
    ptr, idx = instance.succ_indptr, instance.succ_index
    for t in range(instance.n_tasks):
        s = idx[ptr[t]:ptr[t + 1]]
        if len(s):
            out[t] = est[s].min()
    return out


def _horizon(instance: Instance):
    prof = temporal_profile(instance, 1.0)
    if prof.makespan <= 0:
        raise DegenerateHorizon("makespan is zero")
    return prof


def avg_tight_width(instance: Instance) -> float:
    prof = _horizon(instance)
    return float(instance.durations.sum() / prof.makespan)


def avg_filled_width(instance: Instance) -> float:
    """Mean occupancy when each task may run from its earliest start up to
    its earliest successor's earliest start."""
    prof = _horizon(instance)
    cover = _successor_est(instance, prof.est, prof.makespan) - prof.est
    return float(cover.sum() / prof.makespan)


def natural_flexibility(instance: Instance, literal: bool = False) -> float:
    """Total gap between each task's tight finish and its earliest successor.

    ``literal=True`` evaluates ``sum(min_succ est_u - est_t)`` over tasks that
    have successors, i.e. without subtracting the task length.
    """
    prof = temporal_profile(instance, 1.0)
    nxt = _successor_est(instance, prof.est, prof.makespan)
    if literal:
        has_succ = np.diff(instance.succ_indptr) > 0
        return float((nxt - prof.est)[has_succ].sum())
    return float((nxt - prof.est - instance.durations).sum())


def complexity(instance: Instance) -> int:
    """Cyclomatic complexity ``E - N + 2``."""
    return instance.n_edges - instance.n_tasks + 2


def instance_metrics(instance: Instance) -> InstanceMetrics:
    return InstanceMetrics(
        avg_tight_width(instance),
        avg_filled_width(instance),
        natural_flexibility(instance),
        complexity(instance),
    )


def flex_metrics(schedule: IntervalSchedule, instance: Instance, tol: float = ZERO_TOL) -> FlexMetrics:
    f = schedule.flex
    if len(f) != instance.n_tasks:
        raise LengthMismatch("schedule does not match instance")
    preds = predecessor_counts(instance, "direct")
    succs = successor_counts(instance)
    return FlexMetrics(
        int(np.count_nonzero(f <= tol)),
        float(f @ preds),
        float(f @ succs),
        float(f.sum()),
    )


def flex_histogram(schedules: Sequence[IntervalSchedule] | IntervalSchedule, bin_width: float = 2.0, tol: float = ZERO_TOL) -> np.ndarray:
    """Bin counts: ``[0]`` holds zero-flexibility tasks, bin ``k >= 1`` holds
    ``((k-1)w, kw]``.  Several schedules give the per-schedule mean."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if isinstance(schedules, IntervalSchedule):
        schedules = [schedules]
    rows = []
    for sch in schedules:
        f = sch.flex
        idx = np.where(f <= tol, 0, np.maximum(1, np.ceil(f / bin_width - 1e-12))).astype(np.int64)
        rows.append(np.bincount(idx))
    width = max((len(r) for r in rows), default=1)
    total = np.zeros(width)
    for r in rows:
        total[:len(r)] += r
    return total / max(len(rows), 1)


# ---------------------------------------------------------------------------
# statistics


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} vs {len(y)} values")
    if len(x) < 2:
        raise InsufficientSamples("need at least two pairs")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(dx @ dx), math.sqrt(dy @ dy)
    if sx == 0 or sy == 0:
        raise ConstantSeries("correlation undefined for a constant series")
    return float(np.clip((dx @ dy) / (sx * sy), -1.0, 1.0))


def variance(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 2:
        raise InsufficientSamples("need at least two values")
    return float(np.var(x, ddof=1))


@dataclass(frozen=True)
class WelchResult:
    t: float
    dof: float
    p: float
    degenerate: bool = False


def welch_t(x, y) -> WelchResult:
    """Two-sided Welch t-test with Satterthwaite degrees of freedom.

    When both samples have zero variance the statistic is undefined; the
    result is flagged ``degenerate`` with ``t=±inf, p=0`` for different means
    and ``t=0, p=1`` for equal means.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 2 or len(y) < 2:
        raise InsufficientSamples("each sample needs at least two values")
    vx, vy = x.var(ddof=1) / len(x), y.var(ddof=1) / len(y)
    diff = x.mean() - y.mean()
    if vx + vy == 0:
        if diff == 0:
            return WelchResult(0.0, math.nan, 1.0, True)
        return WelchResult(math.copysign(math.inf, diff), math.nan, 0.0, True)
    t = diff / math.sqrt(vx + vy)
    dof = (vx + vy) ** 2 / (vx**2 / (len(x) - 1) + vy**2 / (len(y) - 1))
    p = float(betainc(dof / 2.0, 0.5, dof / (dof + t * t)))
    return WelchResult(float(t), float(dof), p)


def outperform_rate(candidate, baseline) -> float:
    """Share of instances where ``candidate`` is strictly below ``baseline``."""
    c = np.asarray(candidate, dtype=np.float64)
    b = np.asarray(baseline, dtype=np.float64)
    if len(c) != len(b):
        raise LengthMismatch(f"{len(c)} vs {len(b)} instances")
    if len(c) == 0:
        return math.nan
    return float(np.count_nonzero(c < b) / len(c))
