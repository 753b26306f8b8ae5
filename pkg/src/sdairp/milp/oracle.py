"""Brute-force reference solver.

Enumerates every binary assignment and, when continuous variables exist,
solves the residual LP with scipy's HiGHS. It shares no code with the
simplex/branch-and-bound path, which is the point: it exists to check it.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.optimize import linprog

from .model import (INFEASIBLE, OPTIMAL, UNBOUNDED, LinearModel, MipSolution,
                    ModelError)

MAX_BINARIES = 25
CHUNK = 1 << 15


def _bits(codes, k):
    return ((codes[:, None] >> np.arange(k)) & 1).astype(float)


def enumerate_oracle(model: LinearModel, feas_tol: float = 1e-7) -> MipSolution:
    start = time.perf_counter()
    A, senses, b, c, lb, ub, is_bin = model.arrays()
    bins = np.flatnonzero(is_bin)
    k = bins.size
    if k > MAX_BINARIES:
        raise ModelError(f"{k} binaries exceed the oracle limit of {MAX_BINARIES}")
    sign = 1.0 if model.sense == "min" else -1.0
    cont = np.flatnonzero(~is_bin)
    senses = np.array(senses)
    le, eq, ge = senses == "<=", senses == "=", senses == ">="

    best_val = np.inf
    best_x = None
    unbounded = False
    total = 1 << k
    if cont.size == 0:
        Ab = A[:, bins]
        cb = sign * c[bins]
        for lo in range(0, total, CHUNK):
            codes = np.arange(lo, min(total, lo + CHUNK), dtype=np.int64)
            X = _bits(codes, k)
            ok = np.all((X >= lb[bins] - feas_tol) & (X <= ub[bins] + feas_tol), axis=1)
            act = X @ Ab.T
            ok &= np.all(~le | (act <= b + feas_tol), axis=1)
            ok &= np.all(~ge | (act >= b - feas_tol), axis=1)
            ok &= np.all(~eq | (np.abs(act - b) <= feas_tol), axis=1)
            if not ok.any():
                continue
            vals = np.where(ok, X @ cb, np.inf)
            i = int(np.argmin(vals))
            if vals[i] < best_val - 1e-12:
                best_val = float(vals[i])
                best_x = np.zeros(model.num_vars)
                best_x[bins] = X[i]
    else:
        Ac = A[:, cont]
        Ab = A[:, bins]
        cc = sign * c[cont]
        bounds = list(zip(np.where(np.isfinite(lb[cont]), lb[cont], None),
                          np.where(np.isfinite(ub[cont]), ub[cont], None)))
        bounds = [(None if lo is None else float(lo), None if hi is None else float(hi))
                  for lo, hi in bounds]
        for code in range(total):
            xb = _bits(np.array([code], dtype=np.int64), k)[0]
            if np.any(xb < lb[bins] - feas_tol) or np.any(xb > ub[bins] + feas_tol):
                continue
            rhs = b - Ab @ xb
            A_ub = np.vstack([Ac[le], -Ac[ge]])
            b_ub = np.concatenate([rhs[le], -rhs[ge]])
            res = linprog(cc, A_ub=A_ub if A_ub.size else None,
                          b_ub=b_ub if A_ub.size else None,
                          A_eq=Ac[eq] if eq.any() else None,
                          b_eq=rhs[eq] if eq.any() else None,
                          bounds=bounds, method="highs")
            if res.status == 3:
                unbounded = True
                break
            if res.status != 0:
                continue
            val = float(res.fun + sign * c[bins] @ xb)
            if val < best_val - 1e-9:
                best_val = val
                best_x = np.zeros(model.num_vars)
                best_x[bins] = xb
                best_x[cont] = res.x
    elapsed = time.perf_counter() - start
    if unbounded:
        return MipSolution(UNBOUNDED, nodes=total, wall_time=elapsed)
    if best_x is None:
        return MipSolution(INFEASIBLE, nodes=total, wall_time=elapsed)
    obj = model.objective_value(best_x)
    return MipSolution(OPTIMAL, obj, best_x, nodes=total, wall_time=elapsed, bound=obj)
