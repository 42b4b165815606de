"""Project instances: tasks with durations and precedence constraints.

An :class:`Instance` is immutable and validated at construction.  Derived
graph views (topological order, predecessor/successor adjacency in CSR form)
are computed once and cached.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class InvalidInstanceError(ValueError):
    """Raised when task/edge data does not describe a valid precedence DAG."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{kind}: {msg}" for kind, msg in problems))


@dataclass(frozen=True)
class Task:
    id: int
    duration: float


@dataclass(frozen=True)
class ValidationReport:
    problems: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    @property
    def kinds(self) -> set[str]:
        return {kind for kind, _ in self.problems}


def _find_cycle(n: int, edges: Sequence[tuple[int, int]]) -> list[int] | None:
    succ: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        succ[u].append(v)
    color = [0] * n  # 0 new, 1 on stack, 2 done
    parent = [-1] * n
    for root in range(n):
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                continue
            if color[nxt] == 0:
                parent[nxt] = node
                color[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
            elif color[nxt] == 1:
                cycle = [node]
                while cycle[-1] != nxt:
                    cycle.append(parent[cycle[-1]])
                return cycle[::-1]
    return None


def validate(durations: Sequence[float], edges: Iterable[tuple[int, int]]) -> ValidationReport:
    """Check raw task/edge data; every problem found is listed, not just the first."""
    problems: list[tuple[str, str]] = []
    n = len(durations)
    for t, d in enumerate(durations):
        if not np.isfinite(d) or d < 0:
            problems.append(("negative-duration", f"task {t} has duration {d}"))
    seen: set[tuple[int, int]] = set()
    good: list[tuple[int, int]] = []
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            problems.append(("dangling-edge", f"edge ({u},{v}) references a missing task"))
            continue
        if u == v:
            problems.append(("self-loop", f"edge ({u},{v}) is a self-loop"))
            continue
        if (u, v) in seen:
            problems.append(("duplicate-edge", f"edge ({u},{v}) appears more than once"))
            continue
        seen.add((u, v))
        good.append((u, v))
    cycle = _find_cycle(n, good)
    if cycle is not None:
        path = " -> ".join(map(str, cycle + [cycle[0]]))
        problems.append(("cycle-detected", f"cycle {path}"))
    return ValidationReport(problems)


def _csr(n: int, pairs: Sequence[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    """Adjacency of ``pairs`` keyed on the first element, neighbours sorted."""
    buckets: list[list[int]] = [[] for _ in range(n)]
    for key, other in pairs:
        buckets[key].append(other)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i, b in enumerate(buckets):
        b.sort()
        indptr[i + 1] = indptr[i] + len(b)
    idx = np.fromiter((x for b in buckets for x in b), dtype=np.int64, count=int(indptr[-1]))
    return indptr, idx


class Instance:
    """Immutable precedence DAG with task durations.

    Parameters
    ----------
    durations
        Task lengths, indexed by task id ``0..N-1``.
    edges
        Ordered ``(pred, succ)`` pairs.
    name
        Label used for seeding and in reports.
    """

    def __init__(self, durations: Sequence[float], edges: Iterable[tuple[int, int]], name: str = ""):
        durations = [float(d) for d in durations]
        edges = [(int(u), int(v)) for u, v in edges]
        report = validate(durations, edges)
        if not report.ok:
            raise InvalidInstanceError(report.problems)
        d = np.asarray(durations, dtype=np.float64)
        d.setflags(write=False)
        self._durations = d
        self._edges = tuple(sorted(edges))
        self.name = name

    @property
    def durations(self) -> np.ndarray:
        return self._durations

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self._edges

    @property
    def n_tasks(self) -> int:
        return len(self._durations)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def tasks(self) -> tuple[Task, ...]:
        return tuple(Task(i, float(d)) for i, d in enumerate(self._durations))

    @cached_property
    def _pred_csr(self) -> tuple[np.ndarray, np.ndarray]:
        return _csr(self.n_tasks, [(v, u) for u, v in self._edges])

    @cached_property
    def _succ_csr(self) -> tuple[np.ndarray, np.ndarray]:
        return _csr(self.n_tasks, list(self._edges))

    @property
    def pred_indptr(self) -> np.ndarray:
        return self._pred_csr[0]

    @property
    def pred_index(self) -> np.ndarray:
        return self._pred_csr[1]

    @property
    def succ_indptr(self) -> np.ndarray:
        return self._succ_csr[0]

    @property
    def succ_index(self) -> np.ndarray:
        return self._succ_csr[1]

    def predecessors(self, t: int) -> np.ndarray:
        ptr, idx = self._pred_csr
        return idx[ptr[t]:ptr[t + 1]]

    def successors(self, t: int) -> np.ndarray:
        ptr, idx = self._succ_csr
        return idx[ptr[t]:ptr[t + 1]]

    @cached_property
    def order(self) -> np.ndarray:
        """Topological order, ties broken by ascending id."""
        return np.asarray(topological_order(self), dtype=np.int64)

    @cached_property
    def sources(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self.pred_indptr) == 0)

    @cached_property
    def sinks(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self.succ_indptr) == 0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self._edges == other._edges
            and np.array_equal(self._durations, other._durations)
        )

    def __hash__(self) -> int:
        return hash((self.name, self._edges, self._durations.tobytes()))

    def __repr__(self) -> str:
        return f"Instance(name={self.name!r}, n_tasks={self.n_tasks}, n_edges={self.n_edges})"


def topological_order(instance: Instance) -> list[int]:
    n = instance.n_tasks
    indeg = np.diff(instance.pred_indptr).tolist()
    heap = [t for t in range(n) if indeg[t] == 0]
    heapq.heapify(heap)
    out: list[int] = []
    while heap:
        t = heapq.heappop(heap)
        out.append(t)
        for u in instance.successors(t).tolist():
            indeg[u] -= 1
            if indeg[u] == 0:
                heapq.heappush(heap, u)
    return out


@dataclass(frozen=True)
class TemporalProfile:
    est: np.ndarray
    lst: np.ndarray
    makespan: float
    deadline: float


def temporal_profile(instance: Instance, deadline_factor: float = 1.1) -> TemporalProfile:
    """Earliest starts by a forward pass, latest starts by a backward pass
    from ``deadline_factor * makespan``."""
    if deadline_factor < 1:
        raise ValueError(f"deadline_factor must be >= 1, got {deadline_factor}")
    from flexsched.kernels import forward_pass

    l = instance.durations
    est = forward_pass(instance.order, instance.pred_indptr, instance.pred_index, l, np.zeros_like(l))
    makespan = float(np.max(est + l)) if instance.n_tasks else 0.0
    deadline = deadline_factor * makespan
    return TemporalProfile(est, latest_starts(instance, deadline), makespan, deadline)


def latest_starts(instance: Instance, deadline: float) -> np.ndarray:
    l = instance.durations
    lst = np.empty(instance.n_tasks)
    ptr, idx = instance.succ_indptr, instance.succ_index
    for t in instance.order[::-1].tolist():
        s = idx[ptr[t]:ptr[t + 1]]
        lst[t] = (lst[s].min() if len(s) else deadline) - l[t]
    return lst


def predecessor_counts(instance: Instance, mode: str = "direct", n: int | None = None) -> np.ndarray:
    """Per-task predecessor counts.

    ``mode`` is ``"direct"``, ``"distance"`` (distinct tasks reaching ``t`` by a
    path of at most ``n`` edges) or ``"transitive"`` (all ancestors).
    """
    if mode == "direct":
        return np.diff(instance.pred_indptr).astype(np.int64)
    if mode == "distance":
        if n is None or n < 1:
            raise ValueError("distance mode needs n >= 1")
        depth = n
    elif mode == "transitive":
        depth = None
    else:
        raise ValueError(f"unknown predecessor mode {mode!r}")

    # ancestor sets as int bitsets
    order = instance.order.tolist()
    preds = [instance.predecessors(t).tolist() for t in range(instance.n_tasks)]
    direct = [0] * instance.n_tasks
    for t in range(instance.n_tasks):
        for u in preds[t]:
            direct[t] |= 1 << u
    if depth is None:
        anc = [0] * instance.n_tasks
        for t in order:
            acc = direct[t]
            for u in preds[t]:
                acc |= anc[u]
            anc[t] = acc
    else:
        anc = list(direct)
        for _ in range(depth - 1):
            nxt = list(direct)
            for t in range(instance.n_tasks):
                for u in preds[t]:
                    nxt[t] |= anc[u]
            if nxt == anc:
                break
            anc = nxt
    return np.array([a.bit_count() for a in anc], dtype=np.int64)


def successor_counts(instance: Instance) -> np.ndarray:
    return np.diff(instance.succ_indptr).astype(np.int64)


def longest_path_tasks(instance: Instance) -> int:
    """Number of tasks on the longest (by count) path."""
    depth = np.ones(instance.n_tasks, dtype=np.int64)
    for t in instance.order.tolist():
        p = instance.predecessors(t)
        if len(p):
            depth[t] = depth[p].max() + 1
    return int(depth.max()) if instance.n_tasks else 0
