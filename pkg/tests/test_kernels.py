import os
import subprocess
import sys

import numpy as np
import pytest

from flexsched import _pykernels, kernels
from flexsched.ingest import generate

try:
    from flexsched import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def _case(seed, n=60, c=30, runs=40):
    inst = generate(n, c, seed=seed)
    rng = np.random.default_rng(seed)
    f = rng.uniform(0, 2, n)
    a = kernels.forward_pass(inst.order, inst.pred_indptr, inst.pred_index, inst.durations, f, impl=_pykernels)
    extras = rng.uniform(0, 3, (runs, n)) * (rng.random((runs, n)) < 0.4)
    return inst, a, a + f, extras


@needs_ext
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree(seed):
    inst, a, b, extras = _case(seed)
    args = (inst.order, inst.pred_indptr, inst.pred_index)
    f = b - a
    for impl in (_pykernels, _ckernels):
        assert np.array_equal(
            kernels.forward_pass(*args, inst.durations, f, impl=impl),
            kernels.forward_pass(*args, inst.durations, f, impl=_pykernels),
        )
    s0, f0 = kernels.execute(*args, a, inst.durations, extras[0], impl=_pykernels)
    s1, f1 = kernels.execute(*args, a, inst.durations, extras[0], impl=_ckernels)
    assert np.array_equal(s0, s1) and np.array_equal(f0, f1)
    c0 = kernels.violation_counts(*args, a, b, inst.durations, extras, impl=_pykernels)
    c1 = kernels.violation_counts(*args, a, b, inst.durations, extras, impl=_ckernels)
    assert np.array_equal(c0, c1)
    assert c0.dtype == c1.dtype == np.int64


def test_violation_counts_match_single_runs():
    inst, a, b, extras = _case(3, runs=10)
    args = (inst.order, inst.pred_indptr, inst.pred_index)
    counts = kernels.violation_counts(*args, a, b, inst.durations, extras)
    for r in range(len(extras)):
        _, fin = kernels.execute(*args, a, inst.durations, extras[r])
        assert counts[r] == np.count_nonzero(fin > b + inst.durations + 1e-9)


def test_pure_env_selects_fallback():
    code = "import flexsched.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, FLEXSCHED_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None and os.environ.get("FLEXSCHED_PURE", "") in ("", "0"):
        assert kernels.BACKEND == "cython"
