"""Routing model builders, route extraction and combinatorial reference solvers.

Three builders produce :class:`RoutingModel` instances:

* ``build_carp_model``  single-period capacitated arc routing,
* ``build_airp_model``  multi-period arc-inventory routing,
* ``build_svrp_model``  single-period selective routing with per-arc payoffs.

Traversal and service variables exist per *directed* arc, per vehicle (and
per period for the AIRP), so an undirected arc can be crossed at most once in
each direction by a given vehicle. Node 1 is the depot.

:class:`WalkTable` is an independent exact solver for small networks: it
enumerates every closed walk pattern once and answers CARP/SVRP queries for
any demand subset by dynamic programming over arc subsets.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import InstanceError, Network
from .milp import LinearModel, MipSolution, SolverConfig, solve_mip
from .milp.model import BINARY, OPTIMAL

# -- instances -----------------------------------------------------------------


@dataclass(frozen=True)
class CarpInstance:
    net: Network


@dataclass(frozen=True)
class AirpInstance:
    net: Network
    horizon: int
    h: tuple
    r: tuple
    s0: tuple
    big_m: float | None = None

    def __post_init__(self):
        m = self.net.m
        for name in ("h", "r", "s0"):
            v = getattr(self, name)
            if np.isscalar(v):
                v = (float(v),) * m
            v = tuple(float(a) for a in v)
            if len(v) != m:
                raise InstanceError(f"{name} needs one value per arc ({m}), got {len(v)}")
            object.__setattr__(self, name, v)
        if self.horizon < 1:
            raise InstanceError("horizon must be >= 1")
        q = [arc.q for arc in self.net.arcs]
        for a, arc in enumerate(self.net.arcs):
            if self.r[a] < 0:
                raise InstanceError(f"arc {arc}: negative consumption rate")
            if not -1e-12 <= self.s0[a] <= q[a] + 1e-12:
                raise InstanceError(f"arc {arc}: initial inventory outside [0, q]")
        need = 2.0 * (max(q) + max(self.r))
        if self.big_m is None:
            object.__setattr__(self, "big_m", need)
        elif self.big_m < need:
            raise InstanceError(f"big-M {self.big_m} below the safe value {need}")


@dataclass(frozen=True)
class SvrpInstance:
    net: Network
    pi: tuple

    def __post_init__(self):
        pi = tuple(float(v) for v in self.pi)
        if len(pi) != self.net.m:
            raise InstanceError("pi needs one value per arc")
        if not all(math.isfinite(v) for v in pi):
            raise InstanceError("pi must be finite")
        object.__setattr__(self, "pi", pi)


# -- model construction ----------------------------------------------------------


class RoutingModel(LinearModel):
    """LinearModel that remembers where its routing variables live.

    ``x``, ``l`` and ``f`` map ``(t, p, i, j)`` to a column; ``s`` maps
    ``(t, a)`` and ``y`` maps ``a``. Single-period models use ``t = 1``.
    """

    def __init__(self, name, net: Network, periods: int):
        super().__init__(name, "min")
        self.net = net
        self.periods = periods
        self.x: dict = {}
        self.l: dict = {}
        self.f: dict = {}
        self.s: dict = {}
        self.y: dict = {}


def _break_symmetry(arcs_order, K):
    """Vehicles allowed to service each arc in ``arcs_order``.

    Relabelling vehicles by the first arc they service shows that some
    optimum has the k-th listed arc serviced by one of vehicles 1..k.
    """
    return {a: range(min(k + 1, K)) for k, a in enumerate(arcs_order)}


def _add_period(model: RoutingModel, t: int, service_ub=None):
    """Routing variables and per-period constraints shared by all three models."""
    net = model.net
    n2 = float(net.n ** 2)
    for p in range(net.K):
        for i, j, a in net.directed():
            model.x[t, p, i, j] = model.add_binary(f"x_{t}_{p + 1}_{i}_{j}")
            ub = 1.0 if service_ub is None else service_ub(a, p)
            model.l[t, p, i, j] = model.add_var(f"l_{t}_{p + 1}_{i}_{j}", 0.0, ub, BINARY)
            model.f[t, p, i, j] = model.add_var(f"f_{t}_{p + 1}_{i}_{j}", 0.0, math.inf)
    for p in range(net.K):
        for v in range(1, net.n + 1):
            row = {}
            for i, j, _ in net.directed():
                if j == v:
                    row[model.x[t, p, i, j]] = row.get(model.x[t, p, i, j], 0.0) + 1.0
                if i == v:
                    row[model.x[t, p, i, j]] = row.get(model.x[t, p, i, j], 0.0) - 1.0
            if row:
                model.add_constr(row, "=", 0.0, f"balance_{t}_{p + 1}_{v}")
        for i, j, _ in net.directed():
            model.add_constr({model.x[t, p, i, j]: 1.0, model.l[t, p, i, j]: -1.0}, ">=", 0.0,
                             f"serve_needs_traverse_{t}_{p + 1}_{i}_{j}")
        fuel = {}
        for i, j, a in net.directed():
            arc = net.arcs[a]
            fuel[model.x[t, p, i, j]] = arc.c
            fuel[model.l[t, p, i, j]] = arc.e
        model.add_constr(fuel, "<=", net.W, f"fuel_{t}_{p + 1}")
        for v in range(2, net.n + 1):
            row = {}
            for i, j, _ in net.directed():
                if i == v:
                    row[model.f[t, p, i, j]] = row.get(model.f[t, p, i, j], 0.0) + 1.0
                    row[model.l[t, p, i, j]] = row.get(model.l[t, p, i, j], 0.0) - 1.0
                if j == v:
                    row[model.f[t, p, i, j]] = row.get(model.f[t, p, i, j], 0.0) - 1.0
            model.add_constr(row, "=", 0.0, f"service_flow_{t}_{p + 1}_{v}")
        for i, j, _ in net.directed():
            model.add_constr({model.f[t, p, i, j]: 1.0, model.x[t, p, i, j]: -n2}, "<=", 0.0,
                             f"flow_cap_{t}_{p + 1}_{i}_{j}")


def _service_terms(model, t, a):
    net = model.net
    arc = net.arcs[a]
    terms = {}
    for p in range(net.K):
        terms[model.l[t, p, arc.i, arc.j]] = 1.0
        terms[model.l[t, p, arc.j, arc.i]] = 1.0
    return terms


def _traversal_objective(model, periods):
    net = model.net
    obj = {}
    for t in periods:
        for p in range(net.K):
            for i, j, a in net.directed():
                obj[model.x[t, p, i, j]] = net.arcs[a].c
    return obj


def build_carp_model(inst: CarpInstance | Network, symmetry_breaking: bool = False) -> RoutingModel:
    net = inst.net if isinstance(inst, CarpInstance) else inst
    model = RoutingModel("carp", net, 1)
    allowed = None
    if symmetry_breaking:
        allowed = _break_symmetry(net.demanded, net.K)
    _add_period(model, 1, _service_ub(allowed))
    for a, arc in enumerate(net.arcs):
        model.add_constr(_service_terms(model, 1, a), "=", float(arc.q), f"cover_{arc.i}_{arc.j}")
    model.set_objective(_traversal_objective(model, [1]), "min")
    return model


def _service_ub(allowed):
    if allowed is None:
        return None
    return lambda a, p: 1.0 if a not in allowed or p in allowed[a] else 0.0


def build_svrp_model(inst: SvrpInstance, symmetry_breaking: bool = False) -> RoutingModel:
    net = inst.net
    model = RoutingModel("svrp", net, 1)
    allowed = _break_symmetry(range(net.m), net.K) if symmetry_breaking else None
    _add_period(model, 1, _service_ub(allowed))
    obj = _traversal_objective(model, [1])
    for a, arc in enumerate(net.arcs):
        model.y[a] = model.add_binary(f"y_{arc.i}_{arc.j}")
        row = _service_terms(model, 1, a)
        row[model.y[a]] = -1.0
        model.add_constr(row, "=", 0.0, f"select_{arc.i}_{arc.j}")
        obj[model.y[a]] = inst.pi[a]
    model.set_objective(obj, "min")
    return model


def build_airp_model(inst: AirpInstance) -> RoutingModel:
    net = inst.net
    T = inst.horizon
    M = inst.big_m
    model = RoutingModel("airp", net, T)
    q = [float(arc.q) for arc in net.arcs]
    for a in range(net.m):
        if inst.r[a] > q[a] + 1e-12:
            raise InstanceError(f"arc {net.arcs[a]}: rate exceeds q, inventory bounds unsatisfiable")
    for t in range(1, T + 1):
        _add_period(model, t)
        for a, arc in enumerate(net.arcs):
            model.s[t, a] = model.add_var(f"s_{t}_{arc.i}_{arc.j}", inst.r[a], q[a])
    holding_const = sum(inst.h[a] * inst.s0[a] for a in range(net.m))
    for t in range(1, T + 1):
        for a, arc in enumerate(net.arcs):
            serve = _service_terms(model, t, a)
            tag = f"{t}_{arc.i}_{arc.j}"
            model.add_constr(serve, "<=", 1.0, f"once_{tag}")
            prev = model.s.get((t - 1, a))
            # s_{t-1} - r - s_t  within +/- M * served
            lo = {model.s[t, a]: -1.0, **{k: M for k in serve}}
            hi = {model.s[t, a]: -1.0, **{k: -M for k in serve}}
            rhs = inst.r[a]
            if prev is None:
                rhs -= inst.s0[a]
            else:
                lo[prev] = 1.0
                hi[prev] = 1.0
            model.add_constr(lo, ">=", rhs, f"carry_lo_{tag}")
            model.add_constr(hi, "<=", rhs, f"carry_hi_{tag}")
            # s_t >= q - M (1 - served)
            model.add_constr({model.s[t, a]: 1.0, **{k: -M for k in serve}}, ">=", q[a] - M,
                             f"order_up_to_{tag}")
    if net.zeta > 0:
        out = {}
        for t in range(1, T + 1):
            for p in range(net.K):
                out[t, p] = [model.x[t, p, i, j] for i, j, _ in net.directed() if i == 1]
        Mz = float(max(len(v) for v in out.values()))
        for p in range(net.K):
            for t in range(1, T + 1):
                for tau in range(1, net.zeta + 1):
                    if t + tau > T:
                        break
                    row = {k: Mz for k in out[t, p]}
                    for k in out[t + tau, p]:
                        row[k] = row.get(k, 0.0) + 1.0
                    model.add_constr(row, "<=", Mz, f"recharge_{t}_{p + 1}_{tau}")
    obj = _traversal_objective(model, range(1, T + 1))
    for t in range(1, T + 1):
        for a in range(net.m):
            obj[model.s[t, a]] = inst.h[a]
    model.set_objective(obj, "min", constant=holding_const)
    return model


# -- routes ----------------------------------------------------------------------


@dataclass
class VehicleRoute:
    vehicle: int
    walk: list
    serviced: list
    fuel: float
    cost: float

    def to_dict(self):
        return {"vehicle": self.vehicle, "walk": self.walk,
                "serviced": [list(a) for a in self.serviced],
                "fuel": self.fuel, "cost": self.cost}


@dataclass
class Routes:
    vehicles: list = field(default_factory=list)

    @property
    def X(self) -> float:
        return float(sum(v.cost for v in self.vehicles))

    @property
    def serviced_arcs(self) -> set:
        return {(min(i, j), max(i, j)) for v in self.vehicles for i, j in v.serviced}

    def to_dict(self):
        return {"X": self.X, "routes": [v.to_dict() for v in self.vehicles]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class RouteError(RuntimeError):
    """Positive traversal variables that do not form depot-rooted closed walks."""


def _hierholzer(arcs, start):
    """Euler circuit over directed ``arcs`` (list of (i, j, key)) from ``start``."""
    out: dict[int, list] = {}
    for i, j, key in arcs:
        out.setdefault(i, []).append((j, key))
    for v in out:
        out[v].sort(key=lambda e: e[1], reverse=True)  # pop() takes the smallest key
    stack = [(start, None)]
    circuit = []
    while stack:
        v, via = stack[-1]
        if out.get(v):
            w, key = out[v].pop()
            stack.append((w, key))
        else:
            circuit.append(stack.pop())
    circuit.reverse()
    return circuit


def routes_from_arcs(net: Network, per_vehicle) -> Routes:
    """Build :class:`Routes` from ``[(traversed {(i,j)}, serviced {(i,j)}, flows {(i,j): f})]``."""
    routes = Routes()
    for p, (trav, serv, flows) in enumerate(per_vehicle):
        trav = sorted(trav)
        cost = sum(net.arcs[net.arc_index(i, j)].c for i, j in trav)
        fuel = cost + sum(net.arcs[net.arc_index(i, j)].e for i, j in serv)
        if not trav:
            routes.vehicles.append(VehicleRoute(p + 1, [], [], 0.0, 0.0))
            continue
        # larger flow first: flow accumulates towards the depot
        keyed = [(i, j, (-flows.get((i, j), 0.0), j)) for i, j in trav]
        circuit = _hierholzer(keyed, net.depot)
        if len(circuit) != len(trav) + 1:
            raise RouteError(f"vehicle {p + 1}: traversed arcs not connected to the depot")
        walk = [v for v, _ in circuit]
        order = [(walk[k], walk[k + 1]) for k in range(len(walk) - 1)]
        serviced = [a for a in order if a in serv]
        routes.vehicles.append(VehicleRoute(p + 1, walk, serviced, float(fuel), float(cost)))
    return routes


def extract_routes(model: RoutingModel, solution: MipSolution, t: int = 1, tol: float = 0.5) -> Routes:
    net = model.net
    if solution.x is None:
        raise RouteError("solution has no assignment")
    x = solution.x
    per_vehicle = []
    for p in range(net.K):
        trav, serv, flows = set(), set(), {}
        for i, j, _ in net.directed():
            if x[model.x[t, p, i, j]] > tol:
                trav.add((i, j))
                flows[i, j] = float(x[model.f[t, p, i, j]])
            if x[model.l[t, p, i, j]] > tol:
                serv.add((i, j))
        if not serv <= trav:
            raise RouteError(f"vehicle {p + 1}: service without traversal")
        per_vehicle.append((trav, serv, flows))
    routes = routes_from_arcs(net, per_vehicle)
    direct = sum(net.arcs[a].c * round(x[model.x[t, p, i, j]])
                 for p in range(net.K) for i, j, a in net.directed())
    if abs(routes.X - direct) > 1e-9 * max(1.0, direct):
        raise RouteError("walk cost differs from the traversal objective")
    return routes


# -- solving helpers -----------------------------------------------------------------


def solve_carp(net: Network, cfg: SolverConfig | None = None,
               symmetry_breaking: bool = True):
    """Build and solve the CARP; returns ``(solution, routes or None)``."""
    model = build_carp_model(CarpInstance(net), symmetry_breaking=symmetry_breaking)
    sol = solve_mip(model, cfg)
    routes = extract_routes(model, sol) if sol.x is not None else None
    return sol, routes


def restrict_demand(net: Network, arcs) -> Network:
    arcs = set(arcs)
    return net.with_demand([1 if a in arcs else 0 for a in range(net.m)])


class CarpCache:
    """Exact CARP costs (and routes) for demand subsets, solved on demand."""

    def __init__(self, net: Network, cfg: SolverConfig | None = None):
        self.net = net
        self.cfg = cfg
        self._store: dict[frozenset, tuple[float, Routes | None]] = {}
        self.solves = 0

    def get(self, arcs) -> tuple[float, Routes | None]:
        key = frozenset(arcs)
        if key not in self._store:
            if not key:
                self._store[key] = (0.0, Routes([VehicleRoute(p + 1, [], [], 0.0, 0.0)
                                                 for p in range(self.net.K)]))
            else:
                sol, routes = solve_carp(restrict_demand(self.net, key), self.cfg)
                self.solves += 1
                if sol.status == OPTIMAL:
                    self._store[key] = (float(sol.objective), routes)
                elif sol.status == "infeasible":
                    self._store[key] = (math.inf, None)
                else:
                    raise RuntimeError(f"CARP on {sorted(key)} stopped with status {sol.status}")
        return self._store[key]

    def cost(self, arcs) -> float:
        return self.get(arcs)[0]


def svrp_by_subsets(net: Network, pi, cost_fn) -> tuple[float, tuple]:
    """Exact SVRP optimum by enumerating subsets of arcs with negative payoff.

    Arcs with ``pi >= 0`` never improve the objective, since routing a
    superset never costs less. ``cost_fn(subset)`` returns the fleet cost
    (``inf`` when infeasible). Ties go to fewer arcs, then lexicographic order.
    """
    cand = [a for a in range(net.m) if pi[a] < 0]
    best = (0.0, ())
    for size in range(1, len(cand) + 1):
        for sub in itertools.combinations(cand, size):
            gain = sum(pi[a] for a in sub)
            if gain >= best[0] - 1e-12:
                continue
            c = cost_fn(sub)
            if c + gain < best[0] - 1e-9:
                best = (c + gain, sub)
    return best


# -- combinatorial reference solver ------------------------------------------------------

_COUNT = np.array([0, 1, 1, 2])
WALK_TABLE_MAX_ARCS = 12


class WalkTable:
    """All single-vehicle closed-walk patterns of a small network.

    Each arc is unused, crossed i->j, crossed j->i, or crossed both ways
    (the same states a vehicle's binary traversal variables allow). Balanced
    patterns whose support is connected to the depot are closed walks; the
    cheapest one per support set (and per number of depot departures) is
    kept. From that, ``vehicle_cost(L)`` is the cheapest walk able to service
    arc set ``L`` within the fuel budget and ``fleet_cost(S)`` the cheapest
    way to split ``S`` over K vehicles.
    """

    def __init__(self, net: Network, chunk: int = 1 << 18):
        m = net.m
        if m > WALK_TABLE_MAX_ARCS:
            raise ValueError(f"walk table limited to {WALK_TABLE_MAX_ARCS} arcs, got {m}")
        self.net = net
        self.m = m
        full = 1 << m
        c = np.array([arc.c for arc in net.arcs])
        e = np.array([arc.e for arc in net.arcs])
        tails = np.array([arc.i for arc in net.arcs])
        heads = np.array([arc.j for arc in net.arcs])
        self.max_dep = int(np.sum((tails == 1) | (heads == 1)))
        connected = self._connected_supports()
        best = np.full((self.max_dep + 1, full), np.inf)
        best_code = np.full((self.max_dep + 1, full), -1, dtype=np.int64)
        total = 4 ** m
        shifts = 2 * np.arange(m, dtype=np.int64)
        for lo in range(0, total, chunk):
            codes = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
            digits = (codes[:, None] >> shifts) & 3
            net_out = np.zeros((codes.size, net.n + 1), dtype=np.int64)
            fwd = digits == 1
            bwd = digits == 2
            for a in range(m):
                sgn = fwd[:, a].astype(np.int64) - bwd[:, a]
                net_out[:, tails[a]] += sgn
                net_out[:, heads[a]] -= sgn
            ok = ~np.any(net_out, axis=1)
            support = ((digits > 0).astype(np.int64) << np.arange(m)).sum(axis=1)
            ok &= connected[support]
            if not ok.any():
                continue
            codes, digits, support = codes[ok], digits[ok], support[ok]
            cost = (_COUNT[digits] * c).sum(axis=1)
            dep = (((digits == 1) | (digits == 3)) & (tails == 1)).sum(axis=1) + \
                  (((digits == 2) | (digits == 3)) & (heads == 1)).sum(axis=1)
            key = dep * full + support
            order = np.lexsort((codes, cost, key))
            uniq, first = np.unique(key[order], return_index=True)
            pick = order[first]
            d, s = uniq // full, uniq % full
            better = cost[pick] < best[d, s]
            best[d[better], s[better]] = cost[pick][better]
            best_code[d[better], s[better]] = codes[pick][better]
        best[0, 0] = 0.0
        best_code[0, 0] = 0
        self.best = best
        self.best_code = best_code
        masks = np.arange(full)
        bits = ((masks[:, None] >> np.arange(m)) & 1).astype(float)
        self.service_fuel = bits @ e
        self.bits = bits.astype(bool)
        self._vehicle = {}
        self._fleet = {}

    def _connected_supports(self):
        net, m = self.net, self.m
        ok = np.zeros(1 << m, dtype=bool)
        ok[0] = True
        for mask in range(1, 1 << m):
            parent = list(range(net.n + 1))

            def find(v):
                while parent[v] != v:
                    parent[v] = parent[parent[v]]
                    v = parent[v]
                return v

            nodes = set()
            for a in range(m):
                if mask >> a & 1:
                    arc = net.arcs[a]
                    parent[find(arc.i)] = find(arc.j)
                    nodes.update((arc.i, arc.j))
            if 1 in nodes:
                root = find(1)
                ok[mask] = all(find(v) == root for v in nodes)
        return ok

    def vehicle_costs(self, departures: int | None = None) -> np.ndarray:
        """Cheapest fuel-feasible walk servicing exactly arc set L, for every L.

        ``departures`` restricts to walks leaving the depot that many times.
        """
        return self._vehicle_table(departures)[0]

    def _vehicle_table(self, departures):
        if departures in self._vehicle:
            return self._vehicle[departures]
        full = self.best.shape[1]
        if departures is None:
            dsel = np.argmin(self.best, axis=0)
        else:
            dsel = np.full(full, departures)
        cover = self.best[dsel, np.arange(full)]
        arg = np.arange(full)  # support set whose walk realises cover[L]
        for b in range(self.m):  # superset minimum: serve L with any walk covering L
            bit = 1 << b
            idx = np.flatnonzero((np.arange(full) & bit) == 0)
            take = cover[idx | bit] < cover[idx]
            cover[idx] = np.where(take, cover[idx | bit], cover[idx])
            arg[idx] = np.where(take, arg[idx | bit], arg[idx])
        g = np.where(cover + self.service_fuel <= self.net.W + 1e-9, cover, np.inf)
        self._vehicle[departures] = (g, arg, dsel)
        return self._vehicle[departures]

    def fleet_costs(self, K: int | None = None) -> np.ndarray:
        """Cheapest split of every arc set over ``K`` vehicles (default: fleet size)."""
        return self._fleet_table(K)[0]

    def _fleet_table(self, K):
        K = self.net.K if K is None else K
        if K in self._fleet:
            return self._fleet[K]
        g = self.vehicle_costs()
        F = g.copy()
        full = g.size
        choices = []
        for _ in range(K - 1):
            G = F.copy()
            choice = np.zeros(full, dtype=np.int64)  # 0: the previous level serves all of S
            for S in range(1, full):
                low = S & -S
                rest = S ^ low
                sub = rest
                best = G[S]
                pick = 0
                while True:
                    part = sub | low  # part holding the lowest arc
                    v = g[part] + F[S ^ part]
                    if v < best:
                        best = v
                        pick = part
                    if sub == 0:
                        break
                    sub = (sub - 1) & rest
                G[S] = best
                choice[S] = pick
            F = G
            choices.append(choice)
        self._fleet[K] = (F, choices)
        return self._fleet[K]

    def split(self, arcs) -> list[int]:
        """Per-vehicle service masks of an optimal split of ``arcs``."""
        F, choices = self._fleet_table(None)
        S = _mask(arcs)
        if not np.isfinite(F[S]):
            raise ValueError("arc set cannot be serviced by the fleet")
        parts = []
        for choice in reversed(choices):
            part = int(choice[S])
            if part:
                parts.append(part)
                S ^= part
        if S:
            parts.append(S)
        parts += [0] * (self.net.K - len(parts))
        return parts

    def routes(self, arcs) -> Routes:
        """Optimal routes servicing exactly ``arcs``."""
        net = self.net
        g, arg, dsel = self._vehicle_table(None)
        per_vehicle = []
        for part in self.split(arcs):
            if part == 0:
                per_vehicle.append((set(), set(), {}))
                continue
            support = int(arg[part])
            code = int(self.best_code[dsel[support], support])
            trav, serv = set(), set()
            for a, arc in enumerate(net.arcs):
                digit = (code >> (2 * a)) & 3
                if digit in (1, 3):
                    trav.add((arc.i, arc.j))
                if digit in (2, 3):
                    trav.add((arc.j, arc.i))
                if part >> a & 1:
                    serv.add((arc.i, arc.j) if digit in (1, 3) else (arc.j, arc.i))
            per_vehicle.append((trav, serv, {}))
        return routes_from_arcs(net, per_vehicle)

    def carp_cost(self, arcs) -> float:
        return float(self.fleet_costs()[_mask(arcs)])

    def svrp(self, pi) -> tuple[float, tuple]:
        """Exact SVRP optimum over all arc subsets; ties to fewer arcs, then lower mask."""
        pi = np.asarray(pi, dtype=float)
        F = self.fleet_costs()
        value = F + self.bits @ pi
        size = self.bits.sum(axis=1)
        best = np.min(value)
        if not np.isfinite(best):
            return 0.0, ()
        ties = np.flatnonzero(value <= best + 1e-9)
        pick = ties[np.lexsort((ties, size[ties]))[0]]
        return float(value[pick]), tuple(int(a) for a in np.flatnonzero(self.bits[pick]))


def _mask(arcs) -> int:
    m = 0
    for a in arcs:
        m |= 1 << int(a)
    return m


def carp_bruteforce(net: Network, table: WalkTable | None = None) -> float:
    """Exact CARP optimum by closed-walk enumeration (``inf`` if infeasible)."""
    table = table or WalkTable(net)
    return table.carp_cost(net.demanded)


def airp_bruteforce(inst: AirpInstance, table: WalkTable | None = None) -> float:
    """Exact AIRP optimum by exhaustive search (``inf`` if infeasible)."""
    return airp_plan(inst, table)[0]


def airp_plan(inst: AirpInstance, table: WalkTable | None = None) -> tuple[float, list]:
    """Exact AIRP optimum and per-period served arc masks by enumeration.

    Mirrors the model's semantics: unserved inventory decreases by r and must
    stay within [r, q]; a served arc returns to q; with recharge lockout, a
    vehicle that leaves the depot in period t (at most once) may not leave in
    the following zeta periods, and leaving more than once is only possible
    when no later period falls inside the lockout window. Without lockout the
    vehicles are interchangeable every period, so the fleet table is used
    directly.
    """
    net = inst.net
    table = table or WalkTable(net)
    T, K, zeta = inst.horizon, net.K, net.zeta
    q = np.array([arc.q for arc in net.arcs], dtype=float)
    r = np.array(inst.r)
    h = np.array(inst.h)
    bits_of = ((np.arange(1 << net.m)[:, None] >> np.arange(net.m)) & 1).astype(bool)

    if zeta == 0:
        F = table.fleet_costs(K)
        fleet = [(int(S), tuple(), float(F[S])) for S in np.flatnonzero(np.isfinite(F))]

        def period_plans(t, locks):
            return fleet
    else:
        # per-vehicle options: cheapest cost per (mask, departures class 0/1/2+)
        best_opt: dict = {}
        for d in range(table.max_dep + 1):
            g = table.vehicle_costs(d)
            for mask in np.flatnonzero(np.isfinite(g)):
                key = (int(mask), min(d, 2))
                if key not in best_opt or g[mask] < best_opt[key]:
                    best_opt[key] = float(g[mask])
        opts = sorted((mask, cls, cost) for (mask, cls), cost in best_opt.items())
        plan_memo: dict = {}

        def period_plans(t, locks):
            key = (t < T, locks)
            if key in plan_memo:
                return plan_memo[key]
            out = {}

            def rec(p, used, new_locks, cost):
                if p == K:
                    k = (used, tuple(new_locks))
                    if k not in out or cost < out[k]:
                        out[k] = cost
                    return
                lock = locks[p]
                for mask, cls, c in opts:
                    if mask & used:
                        continue
                    if cls > 0:
                        if lock > 0:
                            continue
                        if cls == 2 and t + 1 <= T:
                            continue
                    nl = zeta if cls > 0 else max(lock - 1, 0)
                    rec(p + 1, used | mask, new_locks + [nl], cost + c)

            rec(0, 0, [], 0.0)
            plan_memo[key] = [(u, nl, c) for (u, nl), c in sorted(out.items())]
            return plan_memo[key]

    memo = {}

    def solve(t, s, locks):
        if t > T:
            return 0.0, ()
        key = (t, s, locks)
        if key in memo:
            return memo[key]
        best = (math.inf, ())
        s_arr = np.array(s)
        for served, new_locks, cost in period_plans(t, locks):
            s_next = np.where(bits_of[served], q, s_arr - r)
            if np.any(s_next < r - 1e-9) or np.any(s_next > q + 1e-9):
                continue
            tail, plan = solve(t + 1, tuple(np.round(s_next, 12)), new_locks)
            val = cost + float(h @ s_next) + tail
            if val < best[0]:
                best = (val, (served,) + plan)
        memo[key] = best
        return best

    start = tuple(np.round(np.array(inst.s0), 12))
    locks0 = tuple([0] * K) if zeta > 0 else ()
    value, plan = solve(1, start, locks0)
    return float(h @ np.array(inst.s0)) + value, list(plan)
