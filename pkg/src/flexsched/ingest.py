"""Instance readers/writers and a seeded random instance generator."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from flexsched.instance import Instance, InvalidInstanceError


class ParseError(ValueError):
    """Malformed instance text.  ``kind`` is a short machine-readable tag."""

    def __init__(self, kind: str, message: str, line: int | None = None, source: str | None = None):
        self.kind = kind
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {kind}: {message}".strip())


class GenerationError(ValueError):
    pass


_STARS = re.compile(r"^\*{5,}")


def _psplib_section(lines: list[str], title: str) -> list[tuple[int, str]]:
    """Data lines (1-based numbers) of the section whose header starts with ``title``."""
    start = None
    for i, line in enumerate(lines):
        if line.strip().upper().startswith(title):
            start = i + 1
            break
    if start is None:
        raise ParseError("missing-section", f"no {title!r} section")
    out = []
    for i in range(start, len(lines)):
        s = lines[i].strip()
        if _STARS.match(s):
            break
        if not s or s.startswith("-") or not s[0].isdigit():
            continue  # column headers and rulers
        out.append((i + 1, s))
    return out


def parse_psplib(text: str, name: str = "") -> Instance:
    """Read a PSPLIB single-mode ``.sm`` file.

    Only the precedence and duration sections are used; resource data is
    ignored.  Job numbers are remapped to 0-based ids in file order, dummy
    source and sink jobs included.
    """
    lines = text.splitlines()
    prec = _psplib_section(lines, "PRECEDENCE RELATIONS")
    durs = _psplib_section(lines, "REQUESTS/DURATIONS")

    declared = None
    for line in lines:
        m = re.match(r"\s*jobs\s*\(incl\. supersource/sink\s*\)\s*:\s*(\d+)", line)
        if m:
            declared = int(m.group(1))
            break

    jobs: list[int] = []
    succ_lists: list[list[int]] = []
    for lineno, s in prec:
        try:
            fields = [int(x) for x in s.split()]
        except ValueError:
            raise ParseError("malformed-line", f"non-integer field in {s!r}", lineno, name) from None
        if len(fields) < 3 or len(fields) != 3 + fields[2]:
            raise ParseError("malformed-line", f"successor count does not match list in {s!r}", lineno, name)
        jobs.append(fields[0])
        succ_lists.append(fields[3:])

    durations: dict[int, float] = {}
    for lineno, s in durs:
        parts = s.split()
        if len(parts) < 3:
            raise ParseError("malformed-line", f"expected jobnr, mode, duration in {s!r}", lineno, name)
        try:
            job, duration = int(parts[0]), float(parts[2])
        except ValueError:
            raise ParseError("malformed-line", f"non-numeric field in {s!r}", lineno, name) from None
        if job in durations:
            raise ParseError("malformed-line", f"job {job} listed twice (multi-mode files are unsupported)", lineno, name)
        durations[job] = duration

    if declared is not None and declared != len(jobs):
        raise ParseError("inconsistent-job-count", f"header declares {declared} jobs, precedence section has {len(jobs)}", None, name)
    if set(durations) != set(jobs) or len(set(jobs)) != len(jobs):
        raise ParseError("inconsistent-job-count", f"precedence section lists {len(jobs)} jobs, durations section {len(durations)}", None, name)

    index = {job: i for i, job in enumerate(jobs)}
    edges = []
    for job, succs in zip(jobs, succ_lists):
        for s in succs:
            if s not in index:
                raise ParseError("inconsistent-job-count", f"job {job} has unknown successor {s}", None, name)
            edges.append((index[job], index[s]))
    try:
        return Instance([durations[j] for j in jobs], edges, name=name)
    except InvalidInstanceError as e:
        raise ParseError("invalid-instance", str(e), None, name) from e


def parse_native(text: str, name: str = "") -> Instance:
    """Read the native format: ``N M``, then N ``id duration`` lines, then M ``u v`` lines."""
    rows = [(i + 1, line.split()) for i, line in enumerate(text.splitlines()) if line.strip()]
    if not rows:
        raise ParseError("malformed-line", "empty input", 1, name)

    def ints(lineno, parts, k):
        if len(parts) != k:
            raise ParseError("malformed-line", f"expected {k} fields, got {len(parts)}", lineno, name)
        try:
            return [int(p) for p in parts]
        except ValueError:
            raise ParseError("malformed-line", f"non-integer field in {' '.join(parts)!r}", lineno, name) from None

    n, m = ints(*rows[0], 2)
    if n < 0 or m < 0 or len(rows) != 1 + n + m:
        raise ParseError("count-mismatch", f"header announces {n} tasks and {m} edges, file has {len(rows) - 1} data lines", None, name)
    durations = [0.0] * n
    seen = set()
    for lineno, parts in rows[1:1 + n]:
        if len(parts) != 2:
            raise ParseError("malformed-line", "expected 'id duration'", lineno, name)
        try:
            tid, dur = int(parts[0]), float(parts[1])
        except ValueError:
            raise ParseError("malformed-line", f"bad task line {' '.join(parts)!r}", lineno, name) from None
        if not 0 <= tid < n or tid in seen:
            raise ParseError("count-mismatch", f"task id {tid} outside 0..{n - 1} or repeated", lineno, name)
        seen.add(tid)
        durations[tid] = dur
    edges = []
    for lineno, parts in rows[1 + n:]:
        u, v = ints(lineno, parts, 2)
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError("count-mismatch", f"edge ({u},{v}) references a task id outside 0..{n - 1}", lineno, name)
        edges.append((u, v))
    try:
        return Instance(durations, edges, name=name)
    except InvalidInstanceError as e:
        raise ParseError("invalid-instance", str(e), None, name) from e


def _fmt_duration(d: float) -> str:
    return str(int(d)) if float(d).is_integer() else repr(float(d))


def write_native(instance: Instance) -> str:
    out = [f"{instance.n_tasks} {instance.n_edges}"]
    out += [f"{t} {_fmt_duration(d)}" for t, d in enumerate(instance.durations)]
    out += [f"{u} {v}" for u, v in instance.edges]
    return "\n".join(out)


def read_instance(path: str | Path, fmt: str = "native") -> Instance:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        if fmt == "psplib":
            return parse_psplib(text, name=path.stem)
        if fmt == "native":
            return parse_native(text, name=path.stem)
    except ParseError as e:
        e.source = str(path)
        e.args = (f"{path}: {e}",)
        raise
    raise ValueError(f"unknown format {fmt!r}")


def load_directory(directory: str | Path, fmt: str = "native") -> list[Instance]:
    """All instances in ``directory``, sorted by name."""
    suffixes = {".sm"} if fmt == "psplib" else {".txt", ".dag"}
    paths = sorted(p for p in Path(directory).iterdir() if p.is_file() and p.suffix in suffixes)
    instances = [read_instance(p, fmt) for p in paths]
    return sorted(instances, key=lambda x: x.name)


def max_edges(n_tasks: int) -> int:
    return n_tasks * (n_tasks - 1) // 2


def _add_edges(edges: set, n: int, n_edges: int, rng: np.random.Generator, max_degree: int = 3) -> set:
    """Top up ``edges`` to ``n_edges`` random forward edges.

    Like the ProGen networks behind PSPLIB, new edges avoid transitive
    redundancy and keep in/out degree <= ``max_degree``; both preferences are
    dropped if the sampler gets stuck.
    """
    reach = [0] * n  # descendant bitsets
    succ: list[list[int]] = [[] for _ in range(n)]
    indeg, outdeg = [0] * n, [0] * n
    for u, v in edges:
        succ[u].append(v)
        outdeg[u] += 1
        indeg[v] += 1
    for u in range(n - 1, -1, -1):  # ids are topological
        for v in succ[u]:
            reach[u] |= (1 << v) | reach[v]

    strict, tries = True, 0
    while len(edges) < n_edges:
        u, v = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
        tries += 1
        if strict and tries > 200 * n:
            strict = False
        if (u, v) in edges:
            continue
        if strict and ((reach[u] >> v) & 1 or outdeg[u] >= max_degree or indeg[v] >= max_degree):
            continue
        edges.add((u, v))
        outdeg[u] += 1
        indeg[v] += 1
        gain = (1 << v) | reach[v]
        mask = 1 << u
        for w in range(u + 1):
            if w == u or reach[w] & mask:
                reach[w] |= gain
    return edges


def generate(
    n_tasks: int,
    target_complexity: int,
    duration_range: tuple[int, int] = (1, 10),
    seed: int = 0,
    index: int = 0,
    name: str | None = None,
) -> Instance:
    """Random DAG with exactly ``target_complexity + n_tasks - 2`` edges.

    Task ids are a topological numbering; task 0 is the unique source and
    task ``n_tasks - 1`` the unique sink.  Durations are integers drawn
    uniformly from ``duration_range`` (inclusive).  ``(seed, index)`` selects
    the random stream, so a batch of instances can share one seed.
    """
    if n_tasks < 2:
        raise GenerationError("n_tasks must be >= 2")
    lo, hi = duration_range
    if lo < 1 or hi < lo:
        raise GenerationError(f"bad duration range {duration_range}")
    n_edges = target_complexity + n_tasks - 2
    if n_edges < n_tasks - 1 or n_edges > max_edges(n_tasks):
        raise GenerationError(
            f"infeasible-edge-count: {n_edges} edges for {n_tasks} tasks "
            f"(allowed {n_tasks - 1}..{max_edges(n_tasks)})"
        )
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index, n_tasks, target_complexity])))
    durations = rng.integers(lo, hi, endpoint=True, size=n_tasks)

    # Backbone: one predecessor per non-source node, preferring nodes that
    # still lack a successor with probability `bias`.  Nodes left without a
    # successor get one extra edge each; raise `bias` until that fits.
    for bias in (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0):
        edges: set[tuple[int, int]] = set()
        open_ = [0]  # nodes without a successor yet
        for v in range(1, n_tasks):
            if open_ and rng.random() < bias:
                u = open_.pop(int(rng.integers(len(open_))))
            else:
                u = int(rng.integers(v))
                if u in open_:
                    open_.remove(u)
            edges.add((u, v))
            open_.append(v)
        for u in open_:
            if u != n_tasks - 1:
                edges.add((u, int(rng.integers(u + 1, n_tasks))))
        if len(edges) <= n_edges:
            break
    else:  # pragma: no cover - bias 1.0 always yields a chain
        raise GenerationError("backbone construction failed")

    edges = _add_edges(edges, n_tasks, n_edges, rng)
    if name is None:
        name = f"gen_{seed}_{index}"
    return Instance(durations.tolist(), sorted(edges), name=name)
