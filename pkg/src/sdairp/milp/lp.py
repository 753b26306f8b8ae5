"""Dense-tableau bounded dual simplex.

Every column is boxed: infinite bounds are replaced by an artificial
``BIG`` so that any basis can be made dual feasible by bound flipping.
That removes the need for a primal phase one; an optimum that rests on an
artificial bound is reported as unbounded.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .. import _backend
from .model import (INFEASIBLE, OPTIMAL, UNBOUNDED, LinearModel, MipSolution,
                    SolverConfig)

BIG = 1e6
PIVOT_TOL = 1e-7
DEGENERATE_TOL = 1e-12
BLAND_AFTER = 50
REFACTOR_EVERY = 100
REDUCED_COST_ZERO = 1e-9

AT_LOWER, AT_UPPER = 1, 2


class Infeasible(Exception):
    """Raised by presolve when bounds or rows are contradictory."""


def tighten_bounds(A, senses, b, lb, ub, is_bin, passes=4, tol=1e-9):
    """Activity-based bound tightening. Returns new ``(lb, ub)``."""
    lb = lb.copy()
    ub = ub.copy()
    m = A.shape[0]
    rows = [np.flatnonzero(A[i]) for i in range(m)]
    for _ in range(passes):
        changed = False
        for i in range(m):
            nz = rows[i]
            if nz.size == 0:
                continue
            a = A[i, nz]
            lo = np.where(a > 0, a * lb[nz], a * ub[nz])
            hi = np.where(a > 0, a * ub[nz], a * lb[nz])
            for upper_side in (True, False):
                if upper_side and senses[i] == ">=":
                    continue
                if not upper_side and senses[i] == "<=":
                    continue
                act = lo if upper_side else hi
                finite = np.isfinite(act)
                n_inf = int((~finite).sum())
                if n_inf > 1:
                    continue
                total = float(act[finite].sum())
                for t, k in enumerate(nz):
                    if n_inf == 1 and finite[t]:
                        continue
                    rest = total - (act[t] if finite[t] else 0.0)
                    bound = (b[i] - rest) / a[t]
                    # upper side: a_k x_k <= b - rest ; lower side: a_k x_k >= b - rest
                    is_ub = (a[t] > 0) == upper_side
                    if is_bin[k]:
                        if is_ub and bound < 1.0 - 1e-6 and ub[k] > 0.0:
                            ub[k] = 0.0 if bound >= -1e-6 else bound
                            changed = True
                        elif not is_ub and bound > 1e-6 and lb[k] < 1.0:
                            lb[k] = 1.0 if bound <= 1.0 + 1e-6 else bound
                            changed = True
                    elif is_ub:
                        if bound < ub[k] - 1e-7 * (1.0 + abs(bound)):
                            ub[k] = bound
                            changed = True
                    else:
                        if bound > lb[k] + 1e-7 * (1.0 + abs(bound)):
                            lb[k] = bound
                            changed = True
                    if lb[k] > ub[k] + tol:
                        raise Infeasible(f"bounds of column {k} cross")
                if changed:
                    lo = np.where(a > 0, a * lb[nz], a * ub[nz])
                    hi = np.where(a > 0, a * ub[nz], a * lb[nz])
        if not changed:
            break
    np.minimum(lb, ub, out=lb)
    return lb, ub


class StandardForm:
    """Presolved model in ``A x + s = b`` form with boxed columns.

    Columns fixed by presolve are removed; ``full_x`` maps a reduced
    solution back to the model's variable space.
    """

    def __init__(self, model: LinearModel, presolve: bool = True):
        A, senses, b, c, lb, ub, is_bin = model.arrays()
        self.model = model
        self.sign = 1.0 if model.sense == "min" else -1.0
        c = self.sign * c
        self.infeasible = False
        if presolve:
            try:
                lb, ub = tighten_bounds(A, senses, b, lb, ub, is_bin)
            except Infeasible:
                self.infeasible = True
        self.orig_lb = lb
        self.orig_ub = ub
        fixed = lb == ub
        self.fixed_values = np.where(fixed, lb, 0.0)
        self.cols = np.flatnonzero(~fixed)
        A_red = A[:, self.cols]
        b_red = b - A[:, fixed] @ lb[fixed]
        self.constant = float(c[fixed] @ lb[fixed])
        keep_rows = []
        for i in range(A.shape[0]):
            if np.any(A_red[i] != 0.0):
                keep_rows.append(i)
                continue
            # empty row: must hold on its own
            s, v = senses[i], b_red[i]
            if (s == "<=" and v < -1e-7) or (s == ">=" and v > 1e-7) or (s == "=" and abs(v) > 1e-7):
                self.infeasible = True
        self.rows = np.array(keep_rows, dtype=np.intp)
        A_red = A_red[self.rows]
        m, n = A_red.shape
        self.m, self.n = m, n
        self.b = b_red[self.rows].astype(float)
        self.A = np.hstack([A_red, np.eye(m)])
        self.c = np.concatenate([c[self.cols], np.zeros(m)])
        lb_full = np.concatenate([lb[self.cols], np.zeros(m)])
        ub_full = np.concatenate([ub[self.cols], np.zeros(m)])
        for r, i in enumerate(self.rows):
            if senses[i] == "<=":
                ub_full[n + r] = math.inf
            elif senses[i] == ">=":
                lb_full[n + r] = -math.inf
        self.artificial_lb = ~np.isfinite(lb_full)
        self.artificial_ub = ~np.isfinite(ub_full)
        self.lb = np.where(self.artificial_lb, -BIG, lb_full)
        self.ub = np.where(self.artificial_ub, BIG, ub_full)
        self.is_int = np.concatenate([is_bin[self.cols], np.zeros(m, dtype=bool)])
        # position of each model variable among the reduced columns (-1 if fixed)
        self.position = np.full(A.shape[1], -1, dtype=np.intp)
        self.position[self.cols] = np.arange(n)

    def full_x(self, xr) -> np.ndarray:
        x = self.fixed_values.copy()
        x[self.cols] = xr[: self.n]
        return x

    def objective(self, xr) -> float:
        return self.sign * (float(self.c @ xr) + self.constant) + self.model.obj_constant


@dataclass
class Tableau:
    T: np.ndarray
    beta: np.ndarray
    d: np.ndarray
    basis: np.ndarray
    status: np.ndarray
    xval: np.ndarray

    def copy(self) -> "Tableau":
        return Tableau(self.T.copy(), self.beta.copy(), self.d.copy(),
                       self.basis.copy(), self.status.copy(), self.xval.copy())

    def x(self) -> np.ndarray:
        out = self.xval.copy()
        out[self.basis] = self.beta
        return out

    def snapshot(self):
        """Compact basis record for a later warm start."""
        return self.basis.astype(np.int32), self.status.copy()


class DenseLP:
    def __init__(self, sf: StandardForm, feas_tol: float = 1e-7):
        self.sf = sf
        self.ftol = feas_tol
        self.Ab = np.hstack([sf.A, sf.b[:, None]])
        self.iterations = 0

    def cold(self, lb, ub) -> Tableau:
        sf = self.sf
        N = sf.n + sf.m
        basis = np.arange(sf.n, N, dtype=np.intp)
        status = np.where(sf.c >= 0.0, AT_LOWER, AT_UPPER).astype(np.int8)
        status[basis] = 0
        xval = np.where(status == AT_UPPER, ub, lb).astype(float)
        xval[basis] = 0.0
        T = np.ascontiguousarray(sf.A.copy())
        beta = sf.b - sf.A[:, : sf.n] @ xval[: sf.n]
        d = sf.c.copy()
        return Tableau(T, beta, d, basis, status, xval)

    def factor(self, basis, status, lb, ub) -> Tableau | None:
        """Tableau for a given basis; nonbasic columns flipped to dual feasibility."""
        sf = self.sf
        basis = np.asarray(basis, dtype=np.intp).copy()
        status = np.asarray(status, dtype=np.int8).copy()
        try:
            TB = np.linalg.solve(sf.A[:, basis], self.Ab)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(TB)):
            return None
        T = np.ascontiguousarray(TB[:, :-1])
        d = sf.c - sf.c[basis] @ T
        d[basis] = 0.0
        d[np.abs(d) <= REDUCED_COST_ZERO] = 0.0  # round-off must not flip a column
        nonbasic = np.ones(sf.n + sf.m, dtype=bool)
        nonbasic[basis] = False
        unset = nonbasic & (status == 0)
        status[unset] = np.where(d[unset] < 0.0, AT_UPPER, AT_LOWER)
        status[basis] = 0
        status[nonbasic & (d > 0.0)] = AT_LOWER
        status[nonbasic & (d < 0.0)] = AT_UPPER
        xval = np.where(status == AT_UPPER, ub, lb).astype(float)
        xval[basis] = 0.0
        xN = np.where(nonbasic, xval, 0.0)
        beta = TB[:, -1] - T @ xN
        for k in basis:
            T[:, k] = 0.0
        T[np.arange(sf.m), basis] = 1.0
        return Tableau(T, beta, d, basis, status, xval)

    def run(self, tab: Tableau, lb, ub, verify: bool = False) -> str:
        """Drive ``tab`` to optimality or infeasibility under bounds ``lb, ub``."""
        sf = self.sf
        kern = _backend.kernels
        _sync_bounds(tab, lb, ub)
        budget = 50 * (sf.m + sf.n) + 1000
        used = 0
        checks = 0
        bland = False
        restarted = False
        while True:
            code, it, bland = kern.dual_simplex(
                tab.T, tab.beta, tab.d, tab.basis, tab.status, tab.xval, lb, ub,
                self.ftol, PIVOT_TOL, DEGENERATE_TOL, REFACTOR_EVERY, BLAND_AFTER, bland)
            used += it
            self.iterations += it
            if code == 2:
                fresh = self.factor(tab.basis, tab.status, lb, ub)
                if used > budget or fresh is None:
                    # numerical trouble: restart once from the slack basis
                    if restarted:
                        raise RuntimeError("dual simplex failed to converge")
                    restarted = True
                    fresh = self.cold(lb, ub)
                    used = 0
                    bland = True
                _assign(tab, fresh)
                continue
            if (code == 1 or verify) and checks < 2:
                checks += 1
                fresh = self.factor(tab.basis, tab.status, lb, ub)
                if fresh is not None:
                    moved = np.abs(fresh.beta - tab.beta).max() if sf.m else 0.0
                    _assign(tab, fresh)
                    if code == 1 or moved > self.ftol:
                        continue
            return OPTIMAL if code == 0 else INFEASIBLE

    def unbounded(self, x) -> bool:
        sf = self.sf
        tol = BIG * (1.0 - 1e-9)
        return bool(np.any(sf.artificial_ub & (x >= tol)) or np.any(sf.artificial_lb & (x <= -tol)))


def _sync_bounds(tab: Tableau, lb, ub) -> None:
    """Move nonbasic columns onto their (possibly new) bounds.

    A boxed column whose reduced cost has the wrong sign for its bound is
    flipped to the other bound, which restores dual feasibility.
    """
    nonbasic = tab.status != 0
    movable = nonbasic & (lb != ub)
    tab.status[movable & (tab.status == AT_LOWER) & (tab.d < -REDUCED_COST_ZERO)] = AT_UPPER
    tab.status[movable & (tab.status == AT_UPPER) & (tab.d > REDUCED_COST_ZERO)] = AT_LOWER
    target = np.where(tab.status == AT_UPPER, ub, lb)
    shift = np.flatnonzero(nonbasic & (target != tab.xval))
    if shift.size:
        delta = target[shift] - tab.xval[shift]
        tab.beta -= tab.T[:, shift] @ delta
        tab.xval[shift] = target[shift]


def _assign(dst: Tableau, src: Tableau) -> None:
    dst.T = src.T
    dst.beta = src.beta
    dst.d = src.d
    dst.basis = src.basis
    dst.status = src.status
    dst.xval = src.xval


def solve_lp(model: LinearModel, cfg: SolverConfig | None = None) -> MipSolution:
    """Optimise the continuous relaxation of ``model``."""
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    sf = StandardForm(model)
    if sf.infeasible:
        return MipSolution(INFEASIBLE, nodes=1, wall_time=time.perf_counter() - start)
    lp = DenseLP(sf, cfg.feas_tol)
    tab = lp.cold(sf.lb, sf.ub)
    status = lp.run(tab, sf.lb, sf.ub, verify=True)
    elapsed = time.perf_counter() - start
    if status == INFEASIBLE:
        return MipSolution(INFEASIBLE, nodes=1, wall_time=elapsed)
    xr = tab.x()
    if lp.unbounded(xr):
        return MipSolution(UNBOUNDED, nodes=1, wall_time=elapsed)
    obj = sf.objective(xr)
    return MipSolution(OPTIMAL, obj, sf.full_x(xr), nodes=1, wall_time=elapsed, bound=obj)
