# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Markov path sampling, Birkhoff accumulation and
log-domain power iteration.  Mirrors _pykernels semantics exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log

cnp.import_array()

BACKEND = "cython"


def sample_state_paths(cnp.ndarray[cnp.float64_t, ndim=1] start_cum,
                       cnp.ndarray[cnp.float64_t, ndim=2] trans_cum,
                       cnp.ndarray[cnp.float64_t, ndim=2] uniforms):
    cdef Py_ssize_t num = uniforms.shape[0]
    cdef Py_ssize_t steps = uniforms.shape[1]
    cdef Py_ssize_t nstates = start_cum.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] paths = np.empty((num, steps), dtype=np.int64)
    cdef Py_ssize_t i, t, s
    cdef double u
    for i in range(num):
        u = uniforms[i, 0]
        s = 0
        while s < nstates - 1 and start_cum[s] <= u:
            s += 1
        paths[i, 0] = s
        for t in range(1, steps):
            u = uniforms[i, t]
            s = 0
            while s < nstates - 1 and trans_cum[paths[i, t - 1], s] <= u:
                s += 1
            paths[i, t] = s
    return paths


def birkhoff_averages(cnp.ndarray[cnp.int64_t, ndim=2] symbols,
                      cnp.ndarray[cnp.float64_t, ndim=1] table,
                      Py_ssize_t memory, Py_ssize_t k):
    cdef Py_ssize_t num = symbols.shape[0]
    cdef Py_ssize_t n = symbols.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(num, dtype=np.float64)
    cdef Py_ssize_t i, t, j, idx
    cdef double acc
    for i in range(num):
        acc = 0.0
        for t in range(n):
            idx = 0
            for j in range(memory):
                idx = idx * k + symbols[i, (t + j) % n]
            acc += table[idx]
        out[i] = acc / n
    return out


def power_iteration_log(cnp.ndarray[cnp.float64_t, ndim=2] log_matrix,
                        double tol, Py_ssize_t max_iter):
    cdef Py_ssize_t dim = log_matrix.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] log_vec = np.zeros(dim)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] new = np.empty(dim)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] prev1 = np.full(dim, np.inf)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] prev2 = np.full(dim, np.inf)
    cdef double log_lam
    cdef double peak, accum, shift, hi, scale, d1, d2, d
    cdef Py_ssize_t it, i, j
    cdef int hits = 0
    cdef bint ok = False
    for it in range(max_iter):
        shift = -np.inf
        for i in range(dim):
            peak = -np.inf
            for j in range(dim):
                if log_matrix[i, j] + log_vec[j] > peak:
                    peak = log_matrix[i, j] + log_vec[j]
            if peak == -np.inf:
                new[i] = -np.inf
                continue
            accum = 0.0
            for j in range(dim):
                accum += exp(log_matrix[i, j] + log_vec[j] - peak)
            new[i] = peak + log(accum)
            if new[i] > shift:
                shift = new[i]
        # accept on vector stability; the two-step comparison tolerates the
        # rounding-level two-cycle driven by a near-(-lambda) subdominant
        # eigenvalue, and three consecutive hits guard against accidental
        # crossings of rotating complex modes
        scale = tol * (1.0 + fabs(shift))
        d1 = 0.0
        d2 = 0.0
        for i in range(dim):
            new[i] -= shift
            d = fabs(new[i] - prev1[i])
            if d > d1 or d != d:
                d1 = d
            d = fabs(new[i] - prev2[i])
            if d > d2 or d != d:
                d2 = d
        if it == 0:
            d1 = np.inf
        if it <= 1:
            d2 = np.inf
        if d1 < scale or d2 < scale:
            hits += 1
        else:
            hits = 0
        for i in range(dim):
            prev2[i] = prev1[i]
            prev1[i] = new[i]
            log_vec[i] = new[i]
        if hits >= 3:
            ok = True
            break
    if not ok:
        raise ArithmeticError("power iteration failed to converge")
    # Rayleigh refinement, same reduction as the python backend.
    log_mv = np.empty(dim)
    for i in range(dim):
        peak = -np.inf
        for j in range(dim):
            if log_matrix[i, j] + log_vec[j] > peak:
                peak = log_matrix[i, j] + log_vec[j]
        if peak == -np.inf:
            log_mv[i] = -np.inf
            continue
        accum = 0.0
        for j in range(dim):
            accum += exp(log_matrix[i, j] + log_vec[j] - peak)
        log_mv[i] = peak + log(accum)
    num = log_mv + log_vec
    den = 2.0 * log_vec
    hi = max(num.max(), den.max())
    log_lam = log(np.exp(num - hi).sum()) - log(np.exp(den - hi).sum())
    return log_lam, log_vec
