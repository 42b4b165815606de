# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled hot loops; see ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def forward_pass(const cnp.int64_t[::1] order, const cnp.int64_t[::1] indptr,
                 const cnp.int64_t[::1] preds, const double[::1] lengths,
                 const double[::1] flex):
    cdef Py_ssize_t n = lengths.shape[0], i, k, t
    cdef double best, e
    a_arr = np.zeros(n)
    end_arr = np.zeros(n)
    cdef double[::1] a = a_arr
    cdef double[::1] end = end_arr
    for i in range(order.shape[0]):
        t = order[i]
        best = 0.0
        for k in range(indptr[t], indptr[t + 1]):
            e = end[preds[k]]
            if e > best:
                best = e
        a[t] = best
        end[t] = best + flex[t] + lengths[t]
    return a_arr


def execute(const cnp.int64_t[::1] order, const cnp.int64_t[::1] indptr,
            const cnp.int64_t[::1] preds, const double[::1] a,
            const double[::1] lengths, const double[::1] extra):
    cdef Py_ssize_t n = lengths.shape[0], i, k, t
    cdef double s, e
    start_arr = np.empty(n)
    finish_arr = np.empty(n)
    cdef double[::1] start = start_arr
    cdef double[::1] finish = finish_arr
    for i in range(order.shape[0]):
        t = order[i]
        s = a[t]
        for k in range(indptr[t], indptr[t + 1]):
            e = finish[preds[k]]
            if e > s:
                s = e
        start[t] = s
        finish[t] = s + lengths[t] + extra[t]
    return start_arr, finish_arr


def violation_counts(const cnp.int64_t[::1] order, const cnp.int64_t[::1] indptr,
                     const cnp.int64_t[::1] preds, const double[::1] a,
                     const double[::1] b, const double[::1] lengths,
                     const double[:, ::1] extras, double tol):
    cdef Py_ssize_t runs = extras.shape[0], n = extras.shape[1]
    cdef Py_ssize_t r, i, k, t
    cdef double s, e, f
    counts_arr = np.zeros(runs, dtype=np.int64)
    finish_arr = np.empty(n)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef double[::1] finish = finish_arr
    for r in range(runs):
        for i in range(order.shape[0]):
            t = order[i]
            s = a[t]
            for k in range(indptr[t], indptr[t + 1]):
                e = finish[preds[k]]
                if e > s:
                    s = e
            f = s + lengths[t] + extras[r, t]
            finish[t] = f
            if f > b[t] + lengths[t] + tol:
                counts[r] += 1
    return counts_arr
