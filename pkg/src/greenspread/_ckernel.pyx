# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled backend of :func:`greenspread.kernel.simulate`.

Must stay bitwise-identical to ``_pykernel``; build with FP contraction off.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.string cimport memcpy

cnp.import_array()

DEF MAX_PARTIALS = 256


cdef double exact_sum(const double* x, Py_ssize_t n) noexcept nogil:
    # Shewchuk/Neumaier partials with correct final rounding, as math.fsum
    cdef double p[MAX_PARTIALS]
    cdef Py_ssize_t m = 0, i, j, k
    cdef double xv, y, t, hi, lo = 0.0, yr
    for j in range(n):
        xv = x[j]
        i = 0
        for k in range(m):
            y = p[k]
            if fabs(xv) < fabs(y):
                t = xv
                xv = y
                y = t
            hi = xv + y
            yr = hi - xv
            lo = y - yr
            if lo != 0.0:
                p[i] = lo
                i += 1
            xv = hi
        m = i
        if xv != 0.0:
            p[m] = xv
            m += 1
    hi = 0.0
    if m > 0:
        m -= 1
        hi = p[m]
        while m > 0:
            xv = hi
            m -= 1
            y = p[m]
            hi = xv + y
            yr = hi - xv
            lo = y - yr
            if lo != 0.0:
                break
        if m > 0 and ((lo < 0.0 and p[m - 1] < 0.0) or (lo > 0.0 and p[m - 1] > 0.0)):
            y = lo * 2.0
            xv = hi + y
            yr = xv - hi
            if y == yr:
                hi = xv
    return hi


cdef void fill_metrics(const double* gl, Py_ssize_t nb, Py_ssize_t n,
                       double above, double* out) noexcept nogil:
    cdef Py_ssize_t v, nf = n - nb, cb = 0, cf = 0
    for v in range(nb):
        if gl[v] > above:
            cb += 1
    for v in range(nb, n):
        if gl[v] > above:
            cf += 1
    out[0] = exact_sum(gl + nb, nf) / <double>nf
    out[1] = exact_sum(gl, nb) / <double>nb
    out[2] = <double>cf / <double>nf
    out[3] = <double>cb / <double>nb


def simulate(plan, double[::1] gl, const cnp.int64_t[::1] influenced,
             const double[:, ::1] alpha_draws, double alpha, double delta,
             double lt, int ss, int eit, double influenced_above,
             bint record_history):
    cdef const cnp.int64_t[::1] indptr = plan.indptr
    cdef const cnp.int64_t[::1] indices = plan.indices
    cdef const double[::1] weights = plan.weights
    cdef const double[::1] den = plan.den
    cdef const cnp.int64_t[::1] target = plan.target
    cdef Py_ssize_t nb = plan.n_banks
    cdef Py_ssize_t n = gl.shape[0]
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t n_inf = influenced.shape[0]

    metrics_arr = np.zeros((ss + 1, 4))
    cdef double[:, ::1] metrics = metrics_arr
    if record_history:
        history_arr = np.zeros((ss + 1, n))
    else:
        history_arr = np.zeros((1, 1))
    cdef double[:, ::1] history = history_arr
    pending_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] pending = pending_arr

    cdef Py_ssize_t s, q, r, kk, v, b, rest
    cdef double num, new
    cdef bint changed

    with nogil:
        fill_metrics(&gl[0], nb, n, influenced_above, &metrics[0, 0])
        if record_history:
            memcpy(&history[0, 0], &gl[0], n * sizeof(double))
        for s in range(ss):
            changed = False
            if s < eit:
                for q in range(n_inf):
                    if alpha_draws[s, q] < alpha:
                        b = influenced[q]
                        new = gl[b] + delta
                        if new > 1.0:
                            new = 1.0
                        if new != gl[b]:
                            changed = True
                        gl[b] = new

            for r in range(n_rows):
                if indptr[r] == indptr[r + 1]:
                    continue
                num = 0.0
                for kk in range(indptr[r], indptr[r + 1]):
                    num = num + weights[kk] * gl[indices[kk]]
                if num / den[r] > lt:
                    pending[target[r]] += 1

            for v in range(n):
                if pending[v] > 0:
                    new = gl[v] + <double>pending[v] * delta
                    if new > 1.0:
                        new = 1.0
                    if new != gl[v]:
                        changed = True
                    gl[v] = new
                    pending[v] = 0

            if changed:
                fill_metrics(&gl[0], nb, n, influenced_above, &metrics[s + 1, 0])
            else:
                memcpy(&metrics[s + 1, 0], &metrics[s, 0], 4 * sizeof(double))
            if record_history:
                memcpy(&history[s + 1, 0], &gl[0], n * sizeof(double))
            if not changed and s >= eit:
                for rest in range(s + 2, ss + 1):
                    memcpy(&metrics[rest, 0], &metrics[s + 1, 0], 4 * sizeof(double))
                    if record_history:
                        memcpy(&history[rest, 0], &gl[0], n * sizeof(double))
                break

    return metrics_arr, (history_arr if record_history else None)
