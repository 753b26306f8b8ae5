"""Static, myopic and SDAIRP (least-squares Monte Carlo) deployment policies.

Timing within a period t: the rate r_t is realised, the pre-decision
inventory is s_{t-1} - r_t (a stock-out if negative), the policy picks the
arcs to monitor, and monitored arcs are reset to q (order-up-to).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .formulations import (AirpInstance, CarpCache, Routes, VehicleRoute, WalkTable,
                           WALK_TABLE_MAX_ARCS, airp_plan, build_airp_model, extract_routes,
                           svrp_by_subsets)
from .graph import Network
from .milp import SolverConfig, solve_mip
from .milp.model import OPTIMAL
from .regression import fit, predict
from .stochastic import OUParams, simulate_paths

log = logging.getLogger(__name__)

INNER_NAMESPACE = 1  # lookahead paths; ground truth uses 0


# -- state and records -----------------------------------------------------------


@dataclass(frozen=True)
class StateSnapshot:
    """Pre-decision state of period ``t``: inventories ``s`` and rates ``r``."""

    t: int
    s: tuple
    r: tuple
    locks: tuple = ()


@dataclass
class DecisionRecord:
    t: int
    selected: tuple
    routes: Routes
    X: float
    H: float
    O: float
    pre: tuple = ()
    post: tuple = ()
    stockouts: tuple = ()
    notes: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.X + self.H + self.O

    def to_dict(self, net: Network | None = None) -> dict:
        sel = [list(net.arcs[a].key) for a in self.selected] if net else list(self.selected)
        return {"t": self.t, "selected": sel, "X": self.X, "H": self.H, "O": self.O,
                "total": self.total, "pre": list(self.pre), "post": list(self.post),
                "stockouts": list(self.stockouts), "routes": self.routes.to_dict(),
                "notes": list(self.notes)}

    def to_json(self, net: Network | None = None) -> str:
        return json.dumps(self.to_dict(net), sort_keys=True)


def inventory_step(s, r, selected, q):
    """One period of inventory dynamics.

    Returns ``(pre, post, stockout)`` where ``pre = s - r``, ``stockout`` flags
    ``pre < 0`` and ``post`` resets selected arcs to ``q``.
    """
    s = np.asarray(s, dtype=float)
    pre = s - np.asarray(r, dtype=float)
    post = pre.copy()
    sel = list(selected)
    post[sel] = np.asarray(q, dtype=float)[sel]
    return pre, post, pre < 0.0


def period_costs(net: Network, pre, post, selected, routes: Routes, h, rho):
    """``(X, H, O)`` for one period.

    H charges the non-negative part of post-decision inventory; an arc in
    stock-out holds nothing.
    """
    h = np.broadcast_to(np.asarray(h, dtype=float), (net.m,))
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (net.m,))
    X = routes.X
    H = float(h @ np.maximum(np.asarray(post, dtype=float), 0.0))
    O = float(rho[np.asarray(pre) < 0.0].sum())
    return X, H, O


# -- routing back ends ------------------------------------------------------------------


class Router:
    """Exact fleet routing for arbitrary demand subsets of one network."""

    def __init__(self, net: Network, method: str = "auto", cfg: SolverConfig | None = None):
        if method == "auto":
            method = "table" if net.m <= WALK_TABLE_MAX_ARCS else "milp"
        self.net = net
        self.method = method
        if method == "table":
            self.table = WalkTable(net)
        elif method == "milp":
            self.cache = CarpCache(net, cfg)
        else:
            raise ValueError(f"unknown routing method {method!r}")

    def cost(self, arcs) -> float:
        if self.method == "table":
            return self.table.carp_cost(arcs)
        return self.cache.cost(arcs)

    def routes(self, arcs) -> Routes:
        arcs = tuple(sorted(arcs))
        if self.method == "table":
            if not arcs:
                return empty_routes(self.net)
            return self.table.routes(arcs)
        cost, routes = self.cache.get(arcs)
        if routes is None:
            raise ValueError("arc set cannot be serviced by the fleet")
        return routes

    def svrp(self, pi) -> tuple[float, tuple]:
        if self.method == "table":
            return self.table.svrp(pi)
        return svrp_by_subsets(self.net, pi, self.cache.cost)


def empty_routes(net: Network) -> Routes:
    return Routes([VehicleRoute(p + 1, [], [], 0.0, 0.0) for p in range(net.K)])


def _demanded(net):
    return np.array([arc.q for arc in net.arcs], dtype=float)


# -- myopic --------------------------------------------------------------------------


def myopic_decide(state: StateSnapshot, thresholds, net: Network, router: Router,
                  h=0.0, rho=0.0) -> DecisionRecord:
    """Monitor every arc whose pre-decision inventory is below its threshold."""
    s = np.asarray(state.s, dtype=float)
    q = _demanded(net)
    thr = np.broadcast_to(np.asarray(thresholds, dtype=float), (net.m,))
    chosen = [a for a in range(net.m) if q[a] > 0 and s[a] < thr[a]]
    notes = []
    while chosen and not math.isfinite(router.cost(chosen)):
        drop = max(chosen, key=lambda a: (s[a], a))
        chosen.remove(drop)
        notes.append(f"dropped arc {net.arcs[drop]}: routing infeasible within K, W")
        log.info("myopic t=%d: %s", state.t, notes[-1])
    return _record(state, net, tuple(chosen), router.routes(chosen), h, rho, notes)


def _record(state, net, chosen, routes, h, rho, notes=()):
    q = _demanded(net)
    pre = np.asarray(state.s, dtype=float)
    post = pre.copy()
    post[list(chosen)] = q[list(chosen)]
    X, H, O = period_costs(net, pre, post, chosen, routes, h, rho)
    return DecisionRecord(state.t, tuple(chosen), routes, X, H, O, tuple(pre), tuple(post),
                          tuple(int(a) for a in np.flatnonzero(pre < 0)), list(notes))


# -- static --------------------------------------------------------------------------


@dataclass
class Schedule:
    """Per-period monitored arcs and routes for periods ``1..len(periods)``."""

    periods: list
    source: str = "airp"

    def at(self, t: int):
        if not 1 <= t <= len(self.periods):
            raise IndexError(f"period {t} outside schedule of {len(self.periods)} periods")
        return self.periods[t - 1]


def cyclic_plan(s0, mu, q, horizon: int, start: int = 0):
    """Naive cyclic replenishment: arc a every ceil(q/mu) periods.

    ``s0`` is the pre-decision inventory at the first epoch. The first visit
    falls in the last epoch whose expected inventory is still non-negative. Returns a boolean array
    ``(horizon, m)``; row k is epoch ``start + k``.
    """
    s0 = np.asarray(s0, dtype=float)
    mu = np.asarray(mu, dtype=float)
    q = np.asarray(q, dtype=float)
    m = s0.size
    plan = np.zeros((horizon, m), dtype=bool)
    for a in range(m):
        if q[a] <= 0 or mu[a] <= 0:
            continue
        cycle = max(1, math.ceil(q[a] / mu[a]))
        first = min(max(int(math.floor(s0[a] / mu[a])), 0), cycle - 1)
        for k in range(horizon):
            if (start + k - first) % cycle == 0 and start + k >= first:
                plan[k, a] = True
    return plan


def static_schedule(net: Network, horizon: int, s0, rates, h, router: Router,
                    cfg: SolverConfig | None = None, mu=None) -> Schedule:
    """Deterministic AIRP schedule, or a routed cyclic plan if the AIRP stops short.

    Small networks are solved exactly by enumeration over the walk table;
    larger ones by branch and bound under ``cfg``'s node budget.
    """
    cfg = cfg or SolverConfig(node_limit=20000)
    try:
        inst = AirpInstance(net, horizon, h, tuple(rates), tuple(s0))
    except ValueError as exc:
        log.info("static schedule: AIRP not usable (%s); cyclic fallback", exc)
        inst = None
    if inst is not None and router.method == "table":
        value, masks = airp_plan(inst, router.table)
        if math.isfinite(value):
            periods = []
            for mask in masks:
                sel = tuple(a for a in range(net.m) if mask >> a & 1)
                periods.append((sel, router.routes(sel)))
            return Schedule(periods, "airp")
        log.info("static schedule: AIRP infeasible; cyclic fallback")
    elif inst is not None:
        model = build_airp_model(inst)
        sol = solve_mip(model, cfg)
        if sol.x is not None:
            periods = []
            for t in range(1, horizon + 1):
                routes = extract_routes(model, sol, t)
                sel = tuple(sorted(net.arc_index(*k) for k in routes.serviced_arcs))
                periods.append((sel, routes))
            return Schedule(periods, "airp" if sol.status == OPTIMAL else "airp-incumbent")
        log.info("static schedule: AIRP stopped with %s; cyclic fallback", sol.status)
    mu = rates if mu is None else mu
    s_start = np.asarray(s0, dtype=float) - np.asarray(rates, dtype=float)
    plan = cyclic_plan(s_start, mu, _demanded(net), horizon)
    periods = []
    for row in plan:
        sel = [a for a in range(net.m) if row[a]]
        while sel and not math.isfinite(router.cost(sel)):
            sel.pop()
        periods.append((tuple(sel), router.routes(sel)))
    return Schedule(periods, "cyclic")


def static_decide(schedule: Schedule, state: StateSnapshot, net: Network, h=0.0,
                  rho=0.0) -> DecisionRecord:
    sel, routes = schedule.at(state.t)
    return _record(state, net, sel, routes, h, rho)


# -- SDAIRP ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SdairpConfig:
    horizon: int = 2
    paths: int = 100
    basis: int = 5
    rho: tuple | float = 10.0
    h: tuple | float = 0.0
    gamma: float = 1.0
    a_priori: str = "cyclic"
    clamp: bool = True
    seed: int = 0
    threads: int = 1
    a_priori_nodes: int = 2000

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("lookahead horizon T must be >= 1")
        if self.paths < 2:
            raise ValueError("need at least 2 sample paths")
        if self.basis < 1:
            raise ValueError("basis size M must be >= 1")
        if np.any(np.asarray(self.rho, dtype=float) <= 0):
            raise ValueError("stock-out cost rho must be > 0")
        if self.gamma != 1.0:
            raise ValueError("only gamma = 1 is supported")
        if self.a_priori not in ("cyclic", "airp"):
            raise ValueError("a_priori must be 'cyclic' or 'airp'")


def _a_priori(state, params, cfg, net, router):
    """Replenishment flags for epochs 0..T under the a-priori policy."""
    T = cfg.horizon
    q = _demanded(net)
    mu = np.array([p.mu for p in params])
    s = np.asarray(state.s, dtype=float)
    if cfg.a_priori == "airp":
        r = np.clip(np.asarray(state.r, dtype=float), 0.0, None)
        start = np.clip(s + r, 0.0, q)
        try:
            sched = static_schedule(net, T + 1, start, r, cfg.h, router,
                                    SolverConfig(node_limit=cfg.a_priori_nodes), mu=mu)
        except ValueError:
            sched = None
        if sched is not None and sched.source == "airp":
            plan = np.zeros((T + 1, net.m), dtype=bool)
            for k, (sel, _) in enumerate(sched.periods):
                plan[k, list(sel)] = True
            return plan
    return cyclic_plan(s, mu, q, T + 1)


def _stockout_targets(x, rates, replenish, rho):
    return _backend.kernels.stockout_targets(
        np.ascontiguousarray(x, dtype=np.float64), np.ascontiguousarray(rates, dtype=np.float64),
        np.ascontiguousarray(replenish, dtype=np.uint8), float(rho))


def _digest(arr) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).hexdigest()[:16]


def lsm_decide(state: StateSnapshot, cfg: SdairpConfig, net: Network, params,
               router: Router, trace: list | None = None) -> DecisionRecord:
    """Least-squares Monte Carlo policy for the current period.

    Lookahead epochs are 0 (now) .. T. Inner rate paths start from the
    observed rates. Epochs T..1 are revisited backwards: per arc, the
    stock-out cost until the next replenishment is regressed on the
    post-decision inventory across paths, and each path's selective routing
    problem is re-solved with the fitted payoffs. The decision at epoch 0 is
    common to all paths, so its payoffs use the path averages directly.
    """
    T, P, m = cfg.horizon, cfg.paths, net.m
    q = _demanded(net)
    rho = np.broadcast_to(np.asarray(cfg.rho, dtype=float), (m,)).copy()
    h = np.broadcast_to(np.asarray(cfg.h, dtype=float), (m,)).copy()
    live = q > 0
    params = list(params)
    paths = simulate_paths(params, P, T, cfg.seed, (INNER_NAMESPACE, state.t), r0=state.r)
    rates = paths.rates  # (P, T+1, m); epoch 0 holds the observed rates
    plan = _a_priori(state, params, cfg, net, router)
    decide = np.broadcast_to(plan, (P, T + 1, m)).copy()

    def roll(from_epoch):
        """Pre/post inventories for epochs >= from_epoch given ``decide``."""
        for k in range(from_epoch, T + 1):
            if k == 0:
                pre[:, 0] = np.asarray(state.s, dtype=float)
            else:
                pre[:, k] = post[:, k - 1] - rates[:, k]
            post[:, k] = np.where(decide[:, k], q, pre[:, k])

    pre = np.empty((P, T + 1, m))
    post = np.empty((P, T + 1, m))
    roll(0)
    clamp = None
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        for tau in range(T, 0, -1):
            fits = []
            for a in range(m):
                if tau == T or not live[a]:
                    fits.append(None)
                    continue
                # both post-decision outcomes of every path, so the fit sees
                # the full range even when all paths agree on the decision
                xs = np.concatenate([pre[:, tau, a], np.full(P, q[a])])
                later = np.concatenate([rates[:, tau + 1:, a]] * 2)
                flags = np.concatenate([decide[:, tau + 1:, a]] * 2)
                fits.append(fit(xs, _stockout_targets(xs, later, flags, rho[a]), cfg.basis))
            pis = np.zeros((P, m))
            for a in range(m):
                if not live[a]:
                    continue
                clamp = rho[a] if cfg.clamp else None
                s_pre = pre[:, tau, a]
                if fits[a] is None:
                    gain = np.zeros(P)
                else:
                    gain = predict(fits[a], [q[a]], clamp)[0] - predict(fits[a], s_pre, clamp)
                pis[:, a] = gain + h[a] * (q[a] - s_pre)
            pis[:, ~live] = 0.0
            solver = router.svrp
            results = list(pool.map(solver, pis)) if pool else [solver(p) for p in pis]
            new = np.zeros((P, m), dtype=bool)
            for p, (_, sel) in enumerate(results):
                new[p, list(sel)] = True
            decide[:, tau] = new
            roll(tau)
            if trace is not None:
                trace.append({
                    "tau": tau,
                    "fits": {str(a): _digest(f.beta) for a, f in enumerate(fits) if f is not None},
                    "selections": [list(map(int, sel)) for _, sel in results],
                })
    finally:
        if pool:
            pool.shutdown()
    # epoch 0: one decision shared by every path
    s0 = np.asarray(state.s, dtype=float)
    pi0 = np.zeros(m)
    for a in range(m):
        if not live[a]:
            continue
        later = rates[:, 1:, a]
        flags = decide[:, 1:, a]
        keep = _stockout_targets(np.full(P, s0[a]), later, flags, rho[a]).mean()
        reset = _stockout_targets(np.full(P, q[a]), later, flags, rho[a]).mean()
        pi0[a] = reset - keep + h[a] * (q[a] - s0[a])
    value, chosen = router.svrp(pi0)
    if trace is not None:
        trace.append({"tau": 0, "pi": [float(v) for v in pi0], "selected": list(map(int, chosen)),
                      "value": value})
    return _record(state, net, tuple(chosen), router.routes(chosen), h, rho)
