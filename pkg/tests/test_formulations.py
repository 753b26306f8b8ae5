import math

import numpy as np
import pytest

from conftest import triangle
from sdairp.formulations import (AirpInstance, CarpCache, SvrpInstance, WalkTable,
                                 airp_bruteforce, airp_plan, build_airp_model, build_carp_model,
                                 build_svrp_model, extract_routes, restrict_demand, solve_carp,
                                 svrp_by_subsets)
from sdairp.graph import InstanceError
from sdairp.milp import SolverConfig, enumerate_oracle, solve_mip


def _walk_ok(net, route):
    if not route.walk:
        return route.cost == 0.0
    assert route.walk[0] == route.walk[-1] == net.depot
    cost = sum(net.arcs[net.arc_index(a, b)].c for a, b in zip(route.walk, route.walk[1:]))
    return math.isclose(cost, route.cost)


def test_carp_triangle_against_oracles(tri):
    model = build_carp_model(tri)
    sol = solve_mip(model)
    assert sol.objective == enumerate_oracle(model).objective == 9.0
    assert WalkTable(tri).carp_cost(tri.demanded) == 9.0
    routes = extract_routes(model, sol)
    assert routes.X == 9.0 and routes.serviced_arcs == {(1, 2), (1, 3), (2, 3)}
    assert all(_walk_ok(tri, v) for v in routes.vehicles)


def test_carp_infeasible_when_fuel_too_small():
    net = triangle(K=2, W=4)
    assert solve_mip(build_carp_model(net)).status == "infeasible"
    assert WalkTable(net).carp_cost(net.demanded) == math.inf


def test_symmetry_breaking_keeps_optimum(monroy):
    a = solve_carp(monroy, symmetry_breaking=True)[0]
    b = solve_carp(monroy, symmetry_breaking=False)[0]
    assert a.objective == b.objective == WalkTable(monroy).carp_cost(monroy.demanded)


def test_monroy_standin_fuel_dependence(monroy):
    table = WalkTable(monroy.with_fleet(W=50))
    assert table.carp_cost(monroy.demanded) == 15.0
    assert WalkTable(monroy).carp_cost(monroy.demanded) == 19.0


def test_subsets_match_walk_table(monroy):
    table = WalkTable(monroy)
    cache = CarpCache(monroy)
    rng = np.random.default_rng(0)
    for _ in range(6):
        arcs = sorted(rng.choice(monroy.m, size=int(rng.integers(1, 5)), replace=False))
        cost, routes = cache.get(arcs)
        assert cost == table.carp_cost(arcs)
        assert routes.serviced_arcs == {monroy.arcs[a].key for a in arcs}
    assert cache.get([])[0] == 0.0


def test_walk_table_routes_are_valid(monroy):
    table = WalkTable(monroy)
    rng = np.random.default_rng(1)
    for _ in range(30):
        arcs = sorted(rng.choice(monroy.m, size=int(rng.integers(1, monroy.m + 1)),
                                 replace=False))
        cost = table.carp_cost(arcs)
        if not math.isfinite(cost):
            continue
        routes = table.routes(arcs)
        assert routes.X == pytest.approx(cost)
        assert routes.serviced_arcs == {monroy.arcs[a].key for a in arcs}
        assert all(v.fuel <= monroy.W + 1e-9 and _walk_ok(monroy, v) for v in routes.vehicles)


@pytest.mark.parametrize("seed", range(4))
def test_svrp_three_ways(monroy, seed):
    rng = np.random.default_rng(seed)
    pi = rng.uniform(-6, 2, monroy.m)
    table = WalkTable(monroy)
    v_table, arcs = table.svrp(pi)
    v_sub, _ = svrp_by_subsets(monroy, pi, table.carp_cost)
    sol = solve_mip(build_svrp_model(SvrpInstance(monroy, tuple(pi)), symmetry_breaking=True))
    assert v_table == pytest.approx(v_sub) == pytest.approx(sol.objective)
    assert v_table == pytest.approx(table.carp_cost(arcs) + pi[list(arcs)].sum())


def test_svrp_nonnegative_payoffs_choose_nothing(monroy):
    value, arcs = WalkTable(monroy).svrp(np.full(monroy.m, 0.5))
    assert (value, arcs) == (0.0, ())


@pytest.mark.parametrize("seed", range(6))
def test_airp_matches_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    net = triangle(K=int(rng.integers(1, 3)), W=float(rng.choice([8, 10, 20])),
                   zeta=int(rng.integers(0, 2)))
    r = rng.choice([0.0, 0.2, 0.3, 0.5], size=3)
    s0 = np.maximum(r, rng.choice([0.5, 0.7, 1.0], size=3))
    inst = AirpInstance(net, int(rng.integers(1, 3)), 0.1, tuple(r), tuple(s0))
    sol = solve_mip(build_airp_model(inst))
    ref = airp_bruteforce(inst)
    if sol.status == "infeasible":
        assert ref == math.inf
    else:
        assert sol.objective == pytest.approx(ref, abs=1e-9)


def test_airp_holding_only_when_nothing_consumed(tri):
    inst = AirpInstance(tri, 1, 0.1, 0.0, 1.0)
    sol = solve_mip(build_airp_model(inst))
    assert sol.objective == pytest.approx(2 * 0.1 * 3)  # h * s at t = 0 and t = 1


def test_airp_lockout_visible_in_routes():
    net = triangle(K=2, W=20, zeta=1)
    inst = AirpInstance(net, 3, 0.1, 0.5, 1.0)
    model = build_airp_model(inst)
    sol = solve_mip(model)
    assert sol.status == "optimal"
    per_t = [extract_routes(model, sol, t) for t in (1, 2, 3)]
    for t in range(2):
        for p in range(net.K):
            assert not (per_t[t].vehicles[p].walk and per_t[t + 1].vehicles[p].walk)


def test_airp_plan_matches_value(monroy):
    inst = AirpInstance(monroy, 3, 0.1, 0.5, 0.68)
    value, masks = airp_plan(inst)
    table = WalkTable(monroy)
    F = table.fleet_costs()
    s = np.full(monroy.m, 0.68)
    total = 0.1 * s.sum()
    for mask in masks:
        served = np.array([(mask >> a) & 1 for a in range(monroy.m)], dtype=bool)
        s = np.where(served, 1.0, s - 0.5)
        assert np.all(s >= 0.5 - 1e-9)
        total += F[mask] + 0.1 * s.sum()
    assert total == pytest.approx(value)


def test_instance_validation(tri):
    with pytest.raises(InstanceError):
        AirpInstance(tri, 0, 0.1, 0.1, 1.0)
    with pytest.raises(InstanceError):
        AirpInstance(tri, 2, 0.1, (0.1, 0.2), 1.0)
    with pytest.raises(InstanceError):
        AirpInstance(tri, 2, 0.1, 0.1, 1.5)
    with pytest.raises(InstanceError):
        AirpInstance(tri, 2, 0.1, -0.1, 1.0)
    with pytest.raises(InstanceError):
        AirpInstance(tri, 2, 0.1, 0.5, 1.0, big_m=0.5)


def test_restrict_demand(tri):
    sub = restrict_demand(tri, [1])
    assert [a.q for a in sub.arcs] == [0, 1, 0]
    assert solve_carp(sub)[0].objective == 6.0
