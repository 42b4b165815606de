"""Pure-Python/numpy implementations of the hot loops.

Same signatures and results as the compiled ``_ckernels`` module; used when
the extension is not built or ``FLEXSCHED_PURE=1`` is set.
"""
import numpy as np


def forward_pass(order, indptr, preds, lengths, flex):
    """Earliest placement: ``a_t = max(0, max_u a_u + f_u + l_u)`` over predecessors."""
    n = len(lengths)
    a = np.zeros(n)
    end = np.zeros(n)
    for t in order:
        lo, hi = indptr[t], indptr[t + 1]
        if hi > lo:
            a[t] = max(0.0, end[preds[lo:hi]].max())
        end[t] = a[t] + flex[t] + lengths[t]
    return a


def execute(order, indptr, preds, a, lengths, extra):
    """Early-start dispatch of one delay scenario; returns (start, finish)."""
    n = len(lengths)
    start = np.empty(n)
    finish = np.empty(n)
    for t in order:
        s = a[t]
        lo, hi = indptr[t], indptr[t + 1]
        if hi > lo:
            s = max(s, finish[preds[lo:hi]].max())
        start[t] = s
        finish[t] = s + lengths[t] + extra[t]
    return start, finish


def violation_counts(order, indptr, preds, a, b, lengths, extras, tol):
    """Violations per scenario for a batch ``extras`` of shape (runs, N)."""
    runs, n = extras.shape
    finish = np.empty((runs, n))
    limit = b + lengths + tol
    counts = np.zeros(runs, dtype=np.int64)
    for t in order:
        lo, hi = indptr[t], indptr[t + 1]
        if hi > lo:
            s = np.maximum(a[t], finish[:, preds[lo:hi]].max(axis=1))
        else:
            s = np.full(runs, a[t])
        f = s + lengths[t] + extras[:, t]
        finish[:, t] = f
        counts += f > limit[t]
    return counts
