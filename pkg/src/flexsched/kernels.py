"""Backend selection for the hot loops.

The compiled extension is used when importable; ``FLEXSCHED_PURE=1`` forces
the numpy fallback.  Inputs are coerced to contiguous int64/float64 here so
both backends see identical arrays.
"""
import os

import numpy as np

from flexsched import _pykernels

if os.environ.get("FLEXSCHED_PURE", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from flexsched import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"


def _i(x):
    return np.ascontiguousarray(x, dtype=np.int64)


def _f(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def forward_pass(order, indptr, preds, lengths, flex, impl=None):
    impl = impl or _impl
    return impl.forward_pass(_i(order), _i(indptr), _i(preds), _f(lengths), _f(flex))


def execute(order, indptr, preds, a, lengths, extra, impl=None):
    impl = impl or _impl
    return impl.execute(_i(order), _i(indptr), _i(preds), _f(a), _f(lengths), _f(extra))


def violation_counts(order, indptr, preds, a, b, lengths, extras, tol=1e-9, impl=None):
    impl = impl or _impl
    extras = np.ascontiguousarray(np.atleast_2d(extras), dtype=np.float64)
    return impl.violation_counts(_i(order), _i(indptr), _i(preds), _f(a), _f(b), _f(lengths), extras, float(tol))
