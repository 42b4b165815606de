"""Experiment orchestration and CSV reports.

The pipeline is ``metrics -> distribute -> simulate -> report``.  Every
stage returns plain row dicts; :func:`write_csv` handles formatting so that
repeated runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from flexsched import analysis
from flexsched.ingest import generate, load_directory, write_native
from flexsched.instance import Instance, temporal_profile
from flexsched.simulate import DelayParams, monte_carlo, scenario_extras
from flexsched.strategies import DEFAULT_STRATEGIES, Strategy, distribute_detailed

log = logging.getLogger(__name__)

#: (percent of tasks delayed, delay as percent of task length)
DEFAULT_GRID = ((5, 5), (5, 100), (30, 30), (80, 5), (80, 80))
#: the four strategies whose flex metrics are pooled in correlation tables
POOLED = ("maximal", "equalised", "wpre", "wallpre")

INSTANCE_METRICS = ("complexity", "avg_tight_width", "avg_filled_width", "natural_flex")
FLEX_METRICS = ("num_zeros", "flex_x_pred", "flex_x_succ", "total_flex")

INSTANCES_COLUMNS = ("instance", "n_tasks", "n_edges", "complexity", "avg_tight_width",
                     "avg_filled_width", "natural_flex", "makespan", "deadline")
SCHEDULE_COLUMNS = ("instance", "strategy", "task", "a", "b", "flex")
FLEXMETRICS_COLUMNS = ("instance", "strategy", "num_zeros", "flex_x_pred", "flex_x_succ", "total_flex")
SIM_COLUMNS = ("instance", "strategy", "p", "q", "runs", "mean_violations", "var_violations")
REPORT_COLUMNS = ("strategy", "p", "q", "n_instances", "mean_violations", "outperforms_equalised")
CORR_COLUMNS = ("metric", "strategy", "p", "q", "n", "r")
VARIANCE_COLUMNS = ("strategy", "p", "q", "stratum", "n", "mean", "variance")
TTEST_COLUMNS = ("strategy", "p", "q", "stratum_a", "stratum_b", "t", "dof", "p_value")

# columns written in compact form (shortest of up to 6 decimals) instead of fixed 6 decimals
_COMPACT = {"makespan", "deadline", "p", "q"}


class MissingInputs(FileNotFoundError):
    pass


@dataclass
class ExperimentConfig:
    instance_dir: Path | None = None
    format: str = "native"
    strategies: tuple[str, ...] = DEFAULT_STRATEGIES
    grid: tuple[tuple[float, float], ...] = DEFAULT_GRID
    runs: int = 150
    deadline_factor: float = 1.1
    master_seed: int = 0
    out_dir: Path = Path("out")
    jobs: int = 1

    def __post_init__(self):
        if not self.grid:
            raise ValueError("grid must not be empty")
        if not self.strategies:
            raise ValueError("strategies must not be empty")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        for name in self.strategies:
            Strategy.parse(name)

    def params(self, p_pct: float, q_pct: float) -> DelayParams:
        return DelayParams(p_pct / 100.0, q_pct / 100.0, self.runs, self.master_seed)


# ---------------------------------------------------------------------------
# formatting


def _fmt(col: str, value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if col in _COMPACT:
        s = f"{x:.6f}".rstrip("0").rstrip(".")
        return "0" if s in ("-0", "") else s
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(c, row[c]) for c in columns])


def read_csv(path: Path) -> list[dict]:
    if not path.exists():
        raise MissingInputs(f"missing input {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# stages


def metrics_row(instance: Instance, deadline_factor: float = 1.1) -> dict:
    prof = temporal_profile(instance, deadline_factor)
    m = analysis.instance_metrics(instance)
    return {
        "instance": instance.name,
        "n_tasks": instance.n_tasks,
        "n_edges": instance.n_edges,
        "complexity": m.complexity,
        "avg_tight_width": m.avg_tight_width,
        "avg_filled_width": m.avg_filled_width,
        "natural_flex": m.natural_flex,
        "makespan": prof.makespan,
        "deadline": prof.deadline,
    }


@dataclass
class InstanceResult:
    schedules: list[dict]
    flexmetrics: list[dict]
    sims: list[dict]


def process_instance(instance: Instance, config: ExperimentConfig, simulate: bool = True) -> InstanceResult:
    """Distribute every configured strategy and, optionally, simulate the grid."""
    schedules, flexrows, simrows = [], [], []
    dists = []
    for name in config.strategies:
        d = distribute_detailed(Strategy.parse(name), instance, config.deadline_factor)
        dists.append(d)
        for t in range(instance.n_tasks):
            schedules.append({
                "instance": instance.name, "strategy": name, "task": t,
                "a": d.schedule.a[t], "b": d.schedule.b[t], "flex": d.schedule.b[t] - d.schedule.a[t],
            })
        fm = analysis.flex_metrics(d.schedule, instance)
        flexrows.append({
            "instance": instance.name, "strategy": name, "num_zeros": fm.num_zeros,
            "flex_x_pred": fm.flex_x_pred, "flex_x_succ": fm.flex_x_succ, "total_flex": fm.total_flex,
        })
    if simulate:
        for p_pct, q_pct in config.grid:
            params = config.params(p_pct, q_pct)
            extras = scenario_extras(instance, params)
            for name, d in zip(config.strategies, dists):
                mc = monte_carlo(d.schedule, instance, params, extras=extras)
                simrows.append({
                    "instance": instance.name, "strategy": name, "p": p_pct, "q": q_pct,
                    "runs": params.runs, "mean_violations": mc.mean, "var_violations": mc.variance,
                })
    return InstanceResult(schedules, flexrows, simrows)


def _process(args):
    instance, config, simulate = args
    return process_instance(instance, config, simulate)


def run_instances(instances: Sequence[Instance], config: ExperimentConfig, simulate: bool = True) -> list[InstanceResult]:
    work = [(inst, config, simulate) for inst in instances]
    if config.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(_process, work))
    out = []
    for i, w in enumerate(work):
        log.info("instance %s (%d/%d)", w[0].name, i + 1, len(work))
        out.append(_process(w))
    return out


def load_instances(config: ExperimentConfig) -> list[Instance]:
    if config.instance_dir is None:
        raise ValueError("no instance directory configured")
    return load_directory(config.instance_dir, config.format)


def _strategy_key(config: ExperimentConfig):
    order = {s: i for i, s in enumerate(config.strategies)}
    return lambda r: order.get(r["strategy"], len(order))


def cmd_metrics(config: ExperimentConfig, instances: Sequence[Instance] | None = None) -> Path:
    instances = load_instances(config) if instances is None else instances
    rows = sorted((metrics_row(i, config.deadline_factor) for i in instances), key=lambda r: r["instance"])
    path = Path(config.out_dir) / "instances.csv"
    write_csv(path, INSTANCES_COLUMNS, rows)
    return path


def cmd_distribute(config: ExperimentConfig, instances: Sequence[Instance] | None = None) -> tuple[Path, Path]:
    instances = load_instances(config) if instances is None else instances
    results = run_instances(sorted(instances, key=lambda i: i.name), config, simulate=False)
    skey = _strategy_key(config)
    sched = sorted((r for res in results for r in res.schedules), key=lambda r: (r["instance"], skey(r), r["task"]))
    flex = sorted((r for res in results for r in res.flexmetrics), key=lambda r: (r["instance"], skey(r)))
    out = Path(config.out_dir)
    write_csv(out / "schedules.csv", SCHEDULE_COLUMNS, sched)
    write_csv(out / "flexmetrics.csv", FLEXMETRICS_COLUMNS, flex)
    return out / "schedules.csv", out / "flexmetrics.csv"


def cmd_simulate(config: ExperimentConfig, instances: Sequence[Instance] | None = None) -> Path:
    instances = load_instances(config) if instances is None else instances
    results = run_instances(sorted(instances, key=lambda i: i.name), config, simulate=True)
    skey = _strategy_key(config)
    rows = sorted((r for res in results for r in res.sims), key=lambda r: (r["instance"], skey(r), r["p"], r["q"]))
    path = Path(config.out_dir) / "simresults.csv"
    write_csv(path, SIM_COLUMNS, rows)
    return path


# ---------------------------------------------------------------------------
# report


@dataclass
class Report:
    summary: list[dict]
    correlations: list[dict]
    variance: list[dict]
    ttests: list[dict]


def _num(v: str) -> float:
    return float(v)


def build_report(sim_rows: list[dict], flex_rows: list[dict], inst_rows: list[dict],
                 strategies: Sequence[str] | None = None) -> Report:
    """Table-1-style summary, metric/violation correlations and
    complexity-stratified variances from the three CSV tables."""
    inst = {r["instance"]: r for r in inst_rows}
    flex = {(r["instance"], r["strategy"]): r for r in flex_rows}
    cells: dict[tuple[str, float, float], dict[str, float]] = {}
    for r in sim_rows:
        key = (r["strategy"], _num(r["p"]), _num(r["q"]))
        cells.setdefault(key, {})[r["instance"]] = _num(r["mean_violations"])
    if strategies is None:
        strategies = list(dict.fromkeys(r["strategy"] for r in sim_rows))
    order = {s: i for i, s in enumerate(strategies)}
    keys = sorted(cells, key=lambda k: (order.get(k[0], len(order)), k[1], k[2]))

    summary = []
    for s, p, q in keys:
        vals = cells[(s, p, q)]
        names = sorted(vals)
        base = cells.get(("equalised", p, q))
        if base is not None and all(n in base for n in names):
            rate = analysis.outperform_rate([vals[n] for n in names], [base[n] for n in names])
        else:
            rate = math.nan
        summary.append({
            "strategy": s, "p": p, "q": q, "n_instances": len(names),
            "mean_violations": float(np.mean([vals[n] for n in names])), "outperforms_equalised": rate,
        })

    def metric_value(metric, name, strategy):
        if metric in INSTANCE_METRICS:
            return _num(inst[name][metric])
        return _num(flex[(name, strategy)][metric])

    corr = []
    grid = sorted({(p, q) for _, p, q in keys})
    groups = [(s, [s]) for s in strategies] + [("pooled", [s for s in POOLED if s in order])]
    for metric in INSTANCE_METRICS + FLEX_METRICS:
        for label, members in groups:
            for p, q in grid:
                xs, ys = [], []
                for s in members:
                    for name, v in sorted(cells.get((s, p, q), {}).items()):
                        if name in inst and (metric in INSTANCE_METRICS or (name, s) in flex):
                            xs.append(metric_value(metric, name, s))
                            ys.append(v)
                if not xs:
                    continue
                try:
                    r = analysis.pearson(xs, ys)
                except (analysis.ConstantSeries, analysis.InsufficientSamples):
                    r = math.nan
                corr.append({"metric": metric, "strategy": label, "p": p, "q": q, "n": len(xs), "r": r})

    var_rows, t_rows = [], []
    for s, p, q in keys:
        vals = cells[(s, p, q)]
        names = sorted(n for n in vals if n in inst)
        strata: dict[int, list[float]] = {}
        for n in names:
            strata.setdefault(int(_num(inst[n]["complexity"])), []).append(vals[n])
        pooled = [vals[n] for n in names]

        def vrow(label, xs):
            v = analysis.variance(xs) if len(xs) > 1 else math.nan
            return {"strategy": s, "p": p, "q": q, "stratum": label, "n": len(xs),
                    "mean": float(np.mean(xs)) if xs else math.nan, "variance": v}

        var_rows.append(vrow("pooled", pooled))
        levels = sorted(strata)
        for c in levels:
            var_rows.append(vrow(str(c), strata[c]))
        for i, ca in enumerate(levels):
            for cb in levels[i + 1:]:
                if len(strata[ca]) < 2 or len(strata[cb]) < 2:
                    continue
                w = analysis.welch_t(strata[ca], strata[cb])
                t_rows.append({"strategy": s, "p": p, "q": q, "stratum_a": str(ca), "stratum_b": str(cb),
                               "t": w.t, "dof": w.dof, "p_value": w.p})
    return Report(summary, corr, var_rows, t_rows)


def cmd_report(config: ExperimentConfig) -> tuple[Path, Path]:
    out = Path(config.out_dir)
    sims = read_csv(out / "simresults.csv")
    flex = read_csv(out / "flexmetrics.csv")
    inst = read_csv(out / "instances.csv")
    rep = build_report(sims, flex, inst, [s for s in config.strategies if any(r["strategy"] == s for r in sims)] or None)
    write_csv(out / "report.csv", REPORT_COLUMNS, rep.summary)
    write_csv(out / "correlations.csv", CORR_COLUMNS, rep.correlations)
    write_csv(out / "variance.csv", VARIANCE_COLUMNS, rep.variance)
    write_csv(out / "ttests.csv", TTEST_COLUMNS, rep.ttests)
    return out / "report.csv", out / "correlations.csv"


def cmd_gen(n_tasks: int, complexity: int, count: int, seed: int, out_dir: Path,
            duration_range: tuple[int, int] = (1, 10)) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        inst = generate(n_tasks, complexity, duration_range, seed=seed, index=i, name=f"gen_{seed}_{i}")
        path = out / f"{inst.name}.txt"
        path.write_text(write_native(inst) + "\n", encoding="utf-8")
        paths.append(path)
    return paths
