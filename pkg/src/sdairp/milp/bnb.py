"""Best-first branch-and-bound over binary variables.

Children are solved as soon as they are created (warm-started from the
parent's tableau), so every queued node carries its own LP bound. Branching
picks the most fractional binary, ties to the lowest index; the queue orders
by bound with FIFO ties. Both rules are deterministic.
"""

from __future__ import annotations

import heapq
import math
import time
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .lp import DenseLP, StandardForm, Tableau
from .model import (INFEASIBLE, NODE_LIMIT, OPTIMAL, TIME_LIMIT, UNBOUNDED,
                    LinearModel, MipSolution, SolverConfig)

CACHE_SIZE = 32  # warm tableaux kept for nodes likely to be popped soon


@dataclass
class _Node:
    id: int
    parent: "_Node | None"
    var: int
    value: float
    depth: int
    bound: float
    branch_var: int
    basis: tuple | None


def _fractional(x, int_cols, tol):
    """Most fractional integer column, or -1 when all are integral."""
    if int_cols.size == 0:
        return -1
    v = x[int_cols]
    frac = np.abs(v - np.round(v))
    k = int(np.argmax(frac))  # first maximum: lowest index wins ties
    if frac[k] <= tol:
        return -1
    return int(int_cols[k])


def _integral_objective(sf: StandardForm) -> bool:
    c = sf.c[: sf.n]
    is_int = sf.is_int[: sf.n]
    if np.any(c[~is_int] != 0.0):
        return False
    return bool(np.all(c[is_int] == np.round(c[is_int]))) and float(sf.constant).is_integer()


class BranchAndBound:
    def __init__(self, model: LinearModel, cfg: SolverConfig | None = None):
        self.model = model
        self.cfg = cfg or SolverConfig()
        self.sf = StandardForm(model)
        self.lp = DenseLP(self.sf, self.cfg.feas_tol)
        self.int_cols = np.flatnonzero(self.sf.is_int)
        self.integral_obj = _integral_objective(self.sf) and self.int_cols.size > 0
        self.incumbent = None
        self.incumbent_value = math.inf
        self.nodes = 0
        self.log: list[dict] = []

    # bounds along the chain of fixings
    def _bounds(self, node: _Node | None):
        lb = self.sf.lb.copy()
        ub = self.sf.ub.copy()
        while node is not None and node.var >= 0:
            lb[node.var] = ub[node.var] = node.value
            node = node.parent
        return lb, ub

    def _value(self, x) -> float:
        return float(self.sf.c @ x)

    def _prunable(self, bound: float) -> bool:
        if self.incumbent is None:
            return False
        inc = self.incumbent_value
        if self.integral_obj:
            return math.ceil(bound - 1e-6) >= inc - 1e-9
        slack = self.cfg.gap * max(1.0, abs(inc))
        return bound >= inc - slack - 1e-9

    def _accept(self, x) -> None:
        val = self._value(x)
        if val < self.incumbent_value - 1e-12:
            xi = x.copy()
            xi[self.int_cols] = np.round(xi[self.int_cols])
            self.incumbent = xi
            self.incumbent_value = val

    def _record(self, node_id, parent_id, fixings, bound, status):
        if self.cfg.record_nodes:
            self.log.append({"id": node_id, "parent": parent_id, "fixings": fixings,
                             "bound": bound, "status": status})

    def _fixings(self, node):
        out = {}
        while node is not None and node.var >= 0:
            out[int(self.sf.cols[node.var])] = node.value
            node = node.parent
        return out

    def _dive(self, tab: Tableau, lb, ub) -> None:
        """Round-and-resolve descent from ``tab`` looking for an incumbent."""
        tab = tab.copy()
        lb = lb.copy()
        ub = ub.copy()
        for _ in range(self.int_cols.size + 1):
            x = tab.x()
            if self.incumbent is not None and self._prunable(self._value(x)):
                return
            j = _fractional(x, self.int_cols, self.cfg.int_tol)
            if j < 0:
                status = self.lp.run(tab, lb, ub, verify=True)
                if status == "optimal":
                    x = tab.x()
                    if _fractional(x, self.int_cols, self.cfg.int_tol) < 0:
                        self._accept(x)
                return
            first = float(round(x[j]))
            for value in (first, 1.0 - first):
                trial = tab.copy()
                tlb, tub = lb.copy(), ub.copy()
                tlb[j] = tub[j] = value
                if self.lp.run(trial, tlb, tub) == "optimal":
                    tab, lb, ub = trial, tlb, tub
                    break
            else:
                return

    def solve(self) -> MipSolution:
        cfg = self.cfg
        start = time.perf_counter()
        sf = self.sf
        if sf.infeasible:
            return MipSolution(INFEASIBLE, nodes=0, wall_time=time.perf_counter() - start)
        lb, ub = sf.lb, sf.ub
        root_tab = self.lp.cold(lb, ub)
        status = self.lp.run(root_tab, lb, ub, verify=True)
        self.nodes = 1
        if status == INFEASIBLE:
            self._record(0, None, {}, None, "infeasible")
            return self._finish(INFEASIBLE, start, None)
        x = root_tab.x()
        if self.lp.unbounded(x):
            return self._finish(UNBOUNDED, start, None)
        root_bound = self._value(x)
        self._record(0, None, {}, root_bound, "solved")
        j = _fractional(x, self.int_cols, cfg.int_tol)
        if j < 0:
            self._accept(x)
            return self._finish(OPTIMAL, start, root_bound)
        if cfg.dive:
            self._dive(root_tab, lb, ub)

        counter = 0
        root = _Node(0, None, -1, 0.0, 0, root_bound, j, root_tab.snapshot())
        heap = [(root_bound, 0, root)]
        cache = OrderedDict({0: root_tab})
        final = OPTIMAL
        best_open = root_bound
        while heap:
            bound, _, node = heapq.heappop(heap)
            if self._prunable(bound):
                cache.pop(node.id, None)
                continue
            best_open = bound
            if cfg.node_limit is not None and self.nodes >= cfg.node_limit:
                final = NODE_LIMIT
                heapq.heappush(heap, (bound, _, node))
                break
            if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
                final = TIME_LIMIT
                heapq.heappush(heap, (bound, _, node))
                break
            lb, ub = self._bounds(node)
            tab = cache.pop(node.id, None)
            if tab is None:
                tab = self.lp.factor(node.basis[0], node.basis[1], lb, ub)
                if tab is None:
                    tab = self.lp.cold(lb, ub)
                self.lp.run(tab, lb, ub)
            node.basis = None
            j = node.branch_var
            for idx, value in enumerate((0.0, 1.0)):
                child_tab = tab.copy() if idx == 0 else tab
                clb, cub = lb.copy(), ub.copy()
                clb[j] = cub[j] = value
                status = self.lp.run(child_tab, clb, cub)
                self.nodes += 1
                counter += 1
                if status == INFEASIBLE:
                    self._record(counter, node.id, None, None, "infeasible")
                    continue
                cx = child_tab.x()
                cbound = self._value(cx)
                if cfg.record_nodes:
                    child = _Node(counter, node, j, value, node.depth + 1, cbound, -1, None)
                    self._record(counter, node.id, self._fixings(child), cbound, "solved")
                if self._prunable(cbound):
                    continue
                cj = _fractional(cx, self.int_cols, cfg.int_tol)
                if cj < 0:
                    # confirm on a fresh factorisation before trusting the point
                    if self.lp.run(child_tab, clb, cub, verify=True) == OPTIMAL:
                        cx = child_tab.x()
                        if _fractional(cx, self.int_cols, cfg.int_tol) < 0:
                            self._accept(cx)
                    continue
                child = _Node(counter, node, j, value, node.depth + 1, cbound, cj,
                              child_tab.snapshot())
                cache[counter] = child_tab
                if len(cache) > CACHE_SIZE:
                    cache.popitem(last=False)
                heapq.heappush(heap, (cbound, counter, child))
        if final == OPTIMAL:
            if self.incumbent is None:
                return self._finish(INFEASIBLE, start, None)
            return self._finish(OPTIMAL, start, self.incumbent_value)
        open_bound = min(b for b, _, _ in heap) if heap else best_open
        return self._finish(final, start, open_bound)

    def _finish(self, status, start, bound) -> MipSolution:
        sf = self.sf
        elapsed = time.perf_counter() - start
        log = self.log
        sign = sf.sign
        def external(v):
            if v is None:
                return None
            return sign * (v + sf.constant) + self.model.obj_constant
        for entry in log:
            entry["bound"] = external(entry["bound"])
        if self.incumbent is None:
            return MipSolution(status, nodes=self.nodes, wall_time=elapsed,
                               bound=external(bound), node_log=log)
        x = sf.full_x(self.incumbent)
        return MipSolution(status, sf.objective(self.incumbent), x, nodes=self.nodes,
                           wall_time=elapsed, bound=external(bound), node_log=log)


def solve_mip(model: LinearModel, cfg: SolverConfig | None = None) -> MipSolution:
    """Exact optimum of a mixed-binary model (or best incumbent at a limit)."""
    return BranchAndBound(model, cfg).solve()
