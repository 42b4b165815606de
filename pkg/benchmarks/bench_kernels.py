"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--tasks 122] [--runs 150] [--repeat 20]

Prints per-call timings for each hot loop and the speed-up of the compiled
extension, after checking that both backends return identical results.
"""
import argparse
import sys
import timeit

import numpy as np

from flexsched import _pykernels, kernels
from flexsched.ingest import generate
from flexsched.simulate import DelayParams, scenario_extras
from flexsched.strategies import distribute

try:
    from flexsched import _ckernels
except ImportError:
    _ckernels = None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tasks", type=int, default=122)
    ap.add_argument("--complexity", type=int, default=100)
    ap.add_argument("--runs", type=int, default=150, help="Monte-Carlo runs per batch")
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    if _ckernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1

    inst = generate(args.tasks, args.complexity, seed=1)
    sched = distribute("equalised", inst)
    extras = scenario_extras(inst, DelayParams(0.8, 0.8, runs=args.runs, master_seed=0))
    graph = (inst.order, inst.pred_indptr, inst.pred_index)
    cases = {
        "forward_pass": lambda impl: kernels.forward_pass(*graph, inst.durations, sched.flex, impl=impl),
        "execute": lambda impl: kernels.execute(*graph, sched.a, inst.durations, extras[0], impl=impl),
        "violation_counts": lambda impl: kernels.violation_counts(*graph, sched.a, sched.b, inst.durations, extras, impl=impl),
    }

    print(f"instance: {inst.n_tasks} tasks, {inst.n_edges} edges; batch of {args.runs} runs")
    print(f"{'kernel':<18}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}")
    for name, fn in cases.items():
        py, cy = fn(_pykernels), fn(_ckernels)
        same = all(np.array_equal(x, y) for x, y in zip(py, cy)) if isinstance(py, tuple) else np.array_equal(py, cy)
        if not same:
            print(f"{name}: backends disagree")
            return 1
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<18}{t_py:>14.3f}{t_cy:>14.3f}{t_py / t_cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
