"""Command-line entry point: ``flexsched {metrics,distribute,simulate,report,gen}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from flexsched import experiment
from flexsched.experiment import ExperimentConfig
from flexsched.ingest import GenerationError, ParseError
from flexsched.optim import InfeasibleProblem

log = logging.getLogger("flexsched")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


def parse_grid(text: str) -> tuple[tuple[float, float], ...]:
    """``"80:5,80:80"`` -> ((80, 5), (80, 80)); values are percentages."""
    grid = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            p, q = (float(x) for x in item.split(":"))
        except ValueError:
            raise UsageError(f"bad grid entry {item!r}, expected p:q") from None
        grid.append((p, q))
    if not grid:
        raise UsageError("empty grid")
    return tuple(grid)


_SHARED = ("instances", "format", "strategies", "grid", "runs", "seed", "deadline-factor", "out", "jobs")


def _shared_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--instances", help="directory of instance files")
    p.add_argument("--format", choices=("psplib", "native"))
    p.add_argument("--strategies", help="comma-separated strategy names")
    p.add_argument("--grid", help='delay grid in percent, e.g. "80:5,80:80"')
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--deadline-factor", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_parser()
    parser = _Parser(prog="flexsched", description="Flexibility distribution and delay-robustness experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("metrics", parents=[shared], help="instance metrics -> instances.csv")
    sub.add_parser("distribute", parents=[shared], help="strategy schedules -> schedules.csv, flexmetrics.csv")
    sub.add_parser("simulate", parents=[shared], help="Monte-Carlo delays -> simresults.csv")
    sub.add_parser("report", parents=[shared], help="summary tables from the CSVs in --out")
    gen = sub.add_parser("gen", parents=[shared], help="write random native instances")
    gen.add_argument("--n", type=int, required=True, help="tasks per instance")
    gen.add_argument("--complexity", type=int, required=True)
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--durations", default="1:10", help="lo:hi integer duration range")
    return parser


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict[str, str] = {}
    if args.config:
        values.update(read_config_file(args.config))
    unknown = set(values) - set(_SHARED)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in _SHARED:
        flag = getattr(args, key.replace("-", "_"))
        if flag is not None:
            values[key] = str(flag)
    kw = {}
    try:
        if "instances" in values:
            kw["instance_dir"] = Path(values["instances"])
        if "format" in values:
            if values["format"] not in ("psplib", "native"):
                raise UsageError(f"unknown format {values['format']!r}")
            kw["format"] = values["format"]
        if "strategies" in values:
            kw["strategies"] = tuple(s.strip() for s in values["strategies"].split(",") if s.strip())
        if "grid" in values:
            kw["grid"] = parse_grid(values["grid"])
        if "runs" in values:
            kw["runs"] = int(values["runs"])
        if "seed" in values:
            kw["master_seed"] = int(values["seed"])
        if "deadline-factor" in values:
            kw["deadline_factor"] = float(values["deadline-factor"])
        if "out" in values:
            kw["out_dir"] = Path(values["out"])
        if "jobs" in values:
            kw["jobs"] = int(values["jobs"])
        config = ExperimentConfig(**kw)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if config.deadline_factor < 1:
        raise UsageError("deadline-factor must be >= 1")
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = make_config(args)
        if args.command != "report" and args.command != "gen" and config.instance_dir is None:
            raise UsageError("--instances is required")
        if args.command == "metrics":
            print(experiment.cmd_metrics(config))
        elif args.command == "distribute":
            for p in experiment.cmd_distribute(config):
                print(p)
        elif args.command == "simulate":
            print(experiment.cmd_simulate(config))
        elif args.command == "report":
            for p in experiment.cmd_report(config):
                print(p)
        elif args.command == "gen":
            try:
                lo, hi = (int(x) for x in args.durations.split(":"))
            except ValueError:
                raise UsageError(f"bad duration range {args.durations!r}") from None
            for p in experiment.cmd_gen(args.n, args.complexity, args.count, config.master_seed, config.out_dir, (lo, hi)):
                print(p)
    except UsageError as e:
        print(f"flexsched: usage error: {e}", file=sys.stderr)
        return 1
    except (ParseError, GenerationError, InfeasibleProblem, experiment.MissingInputs, OSError) as e:
        print(f"flexsched: data error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
