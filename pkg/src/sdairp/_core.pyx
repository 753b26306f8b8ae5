# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. ``sdairp._fallback`` mirrors every function here
operation-for-operation, so both backends produce bit-identical floats."""

import numpy as np
from libc.math cimport fabs

cdef enum:
    BASIC = 0
    AT_LOWER = 1
    AT_UPPER = 2


def dual_simplex(double[:, ::1] T, double[::1] beta, double[::1] d,
                 Py_ssize_t[::1] basis, signed char[::1] status, double[::1] xval,
                 double[::1] lb, double[::1] ub,
                 double ftol, double ptol, double dtol,
                 Py_ssize_t max_iter, Py_ssize_t bland_after, bint bland):
    """Bounded dual simplex on a dense tableau, in place.

    Returns ``(code, iterations, bland)`` with code 0 optimal, 1 infeasible,
    2 iteration budget exhausted.
    """
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1]
    cdef Py_ssize_t it = 0, i, k, r, j, leave, nnz, degenerate = 0
    cdef double viol, best, target, alpha, ratio, best_ratio, best_alpha
    cdef double theta_p, theta_d, f, dj, a
    cdef bint below
    cdef Py_ssize_t[::1] nzcols = np.empty(n, dtype=np.intp)
    cdef int code = 2

    with nogil:
        while it < max_iter:
            # leaving row
            r = -1
            best = 0.0
            for i in range(m):
                k = basis[i]
                if beta[i] < lb[k] - ftol:
                    viol = lb[k] - beta[i]
                elif beta[i] > ub[k] + ftol:
                    viol = beta[i] - ub[k]
                else:
                    continue
                if bland:
                    if r < 0 or k < basis[r]:
                        r = i
                elif viol > best:
                    best = viol
                    r = i
            if r < 0:
                code = 0
                break
            leave = basis[r]
            below = beta[r] < lb[leave]
            target = lb[leave] if below else ub[leave]

            # entering column (textbook ratio test)
            j = -1
            best_ratio = 0.0
            best_alpha = 0.0
            for k in range(n):
                if status[k] == BASIC or lb[k] == ub[k]:
                    continue
                alpha = T[r, k]
                if below:
                    if status[k] == AT_LOWER:
                        if alpha >= -ptol:
                            continue
                    elif alpha <= ptol:
                        continue
                else:
                    if status[k] == AT_LOWER:
                        if alpha <= ptol:
                            continue
                    elif alpha >= -ptol:
                        continue
                ratio = fabs(d[k]) / fabs(alpha)
                if j < 0 or ratio < best_ratio - 1e-12:
                    j = k
                    best_ratio = ratio
                    best_alpha = fabs(alpha)
                elif ratio <= best_ratio + 1e-12 and not bland and fabs(alpha) > best_alpha:
                    j = k
                    best_ratio = ratio
                    best_alpha = fabs(alpha)
            if j < 0:
                code = 1
                break

            if best_ratio <= dtol:
                degenerate += 1
                if degenerate >= bland_after:
                    bland = True
            else:
                degenerate = 0

            alpha = T[r, j]
            # primal update
            theta_p = (beta[r] - target) / alpha
            for i in range(m):
                f = T[i, j]
                if f != 0.0:
                    beta[i] -= theta_p * f
            beta[r] = xval[j] + theta_p

            # pivot row
            nnz = 0
            for k in range(n):
                if T[r, k] != 0.0:
                    T[r, k] = T[r, k] / alpha
                    nzcols[nnz] = k
                    nnz += 1
            for i in range(m):
                if i == r:
                    continue
                f = T[i, j]
                if f != 0.0:
                    for k in range(nnz):
                        T[i, nzcols[k]] -= f * T[r, nzcols[k]]
                    T[i, j] = 0.0
            dj = d[j]
            if dj != 0.0:
                for k in range(nnz):
                    d[nzcols[k]] -= dj * T[r, nzcols[k]]
            d[j] = 0.0

            basis[r] = j
            status[j] = BASIC
            status[leave] = AT_LOWER if below else AT_UPPER
            xval[leave] = target
            it += 1
    return code, it, bland


def ou_recurrence(double[::1] r0, double[::1] a, double[::1] b, double[::1] s,
                  double[:, ::1] z):
    """out[:, 0] = r0; out[:, t+1] = out[:, t]*a + b + s*z[:, t]."""
    cdef Py_ssize_t k = z.shape[0], steps = z.shape[1], i, t
    out_arr = np.empty((k, steps + 1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(k):
            out[i, 0] = r0[i]
            for t in range(steps):
                out[i, t + 1] = out[i, t] * a[i] + b[i] + s[i] * z[i, t]
    return out_arr


def stockout_targets(double[::1] x, double[:, ::1] rates,
                     unsigned char[:, ::1] replenish, double rho):
    """Stock-out cost up to and including the next replenishment.

    ``rates[p, k]`` and ``replenish[p, k]`` cover the epochs after the
    regression epoch. A path pays ``rho`` once if its inventory goes
    negative before (or at) its first replenishment, else 0.
    """
    cdef Py_ssize_t P = rates.shape[0], L = rates.shape[1], p, k
    cdef double inv
    out_arr = np.zeros(P, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for p in range(P):
            inv = x[p]
            for k in range(L):
                inv = inv - rates[p, k]
                if inv < 0.0:
                    out[p] = rho
                    break
                if replenish[p, k]:
                    break
    return out_arr
