"""Interval schedules and their feasibility."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from flexsched.instance import Instance, TemporalProfile
from flexsched.kernels import forward_pass

FEAS_TOL = 1e-9
ZERO_TOL = 1e-9


class DimensionMismatch(ValueError):
    pass


class InfeasibleFlexibilities(ValueError):
    pass


@dataclass(frozen=True)
class IntervalSchedule:
    """Start window ``[a_t, b_t]`` per task; the task runs ``[s, s + l_t)``."""

    a: np.ndarray
    b: np.ndarray

    @property
    def flex(self) -> np.ndarray:
        return self.b - self.a

    def __len__(self) -> int:
        return len(self.a)


def check_feasible(
    schedule: IntervalSchedule, instance: Instance, deadline: float, tol: float = FEAS_TOL
) -> list[str]:
    """All violated schedule constraints; an empty list means feasible."""
    a, b, l = schedule.a, schedule.b, instance.durations
    if len(a) != instance.n_tasks or len(b) != instance.n_tasks:
        raise DimensionMismatch(f"schedule has {len(a)}/{len(b)} entries, instance {instance.n_tasks} tasks")
    out = []
    for t in np.flatnonzero(a < -tol):
        out.append(f"task {t}: a={a[t]:.12g} < 0")
    for t in np.flatnonzero(a > b + tol):
        out.append(f"task {t}: a={a[t]:.12g} > b={b[t]:.12g}")
    for u, v in instance.edges:
        if b[u] + l[u] > a[v] + tol:
            out.append(f"edge ({u},{v}): b+l={b[u] + l[u]:.12g} > a={a[v]:.12g}")
    for t in np.flatnonzero(b + l > deadline + tol):
        out.append(f"task {t}: b+l={b[t] + l[t]:.12g} > deadline {deadline:.12g}")
    return out


def max_task_flexibility(profile: TemporalProfile) -> np.ndarray:
    """Largest flexibility each task can get on its own (total slack)."""
    if profile.deadline < profile.makespan:
        raise ValueError("deadline below makespan")
    return profile.lst - profile.est


def canonicalize(flex, instance: Instance, deadline: float, tol: float = FEAS_TOL) -> IntervalSchedule:
    """Place windows of the given lengths as early as possible."""
    f = np.asarray(flex, dtype=np.float64)
    if len(f) != instance.n_tasks:
        raise DimensionMismatch(f"{len(f)} flexibilities for {instance.n_tasks} tasks")
    if np.any(f < -tol):
        raise InfeasibleFlexibilities("negative flexibility")
    f = np.maximum(f, 0.0)
    a = forward_pass(instance.order, instance.pred_indptr, instance.pred_index, instance.durations, f)
    b = a + f
    over = b + instance.durations - deadline
    if np.any(over > tol):
        t = int(np.argmax(over))
        raise InfeasibleFlexibilities(f"task {t} ends at {b[t] + instance.durations[t]:.12g} > deadline {deadline:.12g}")
    return IntervalSchedule(a, b)


def total_flexibility(schedule: IntervalSchedule) -> float:
    return float(np.sum(schedule.flex))


def zero_count(schedule: IntervalSchedule, tol: float = ZERO_TOL) -> int:
    return int(np.count_nonzero(schedule.flex <= tol))


def tight_schedule(profile: TemporalProfile) -> IntervalSchedule:
    return IntervalSchedule(profile.est.copy(), profile.est.copy())
