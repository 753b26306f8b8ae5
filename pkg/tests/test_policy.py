import itertools
import json

import numpy as np
import pytest

from conftest import triangle
from sdairp.graph import parse_canonical
from sdairp.milp import enumerate_oracle, solve_mip
from sdairp.formulations import build_carp_model, restrict_demand
from sdairp.policy import (DecisionRecord, Router, SdairpConfig, StateSnapshot, cyclic_plan,
                           inventory_step, lsm_decide, myopic_decide, static_decide,
                           static_schedule)
from sdairp.stochastic import OUParams

SINGLE = parse_canonical("nodes 2 depot 1 K 1 W 10\narc 1 2 c 1 e 0.1 q 1\n", "single")


def test_inventory_step_examples():
    pre, post, so = inventory_step([0.613], [0.331], [0], [1.0])
    assert pre[0] == pytest.approx(0.282) and post[0] == 1.0 and not so[0]
    pre, post, so = inventory_step([0.440], [0.522], [], [1.0])
    assert pre[0] == pytest.approx(-0.082) and post[0] == pre[0] and so[0]
    pre, post, so = inventory_step([0.7, 0.2], [0.0, 0.0], [], [1.0, 1.0])
    assert list(post) == [0.7, 0.2] and not so.any()


def test_myopic_empty_selection(tri):
    router = Router(tri)
    rec = myopic_decide(StateSnapshot(1, (0.9, 0.8, 0.7), (0.1,) * 3), 0.5, tri, router)
    assert rec.selected == () and rec.X == 0.0 and rec.routes.X == 0.0


def test_myopic_single_arc_out_and_back(tri):
    router = Router(tri)
    rec = myopic_decide(StateSnapshot(1, (0.2, 0.8, 0.7), (0.1,) * 3), 0.5, tri, router)
    assert rec.selected == (0,)
    ref = enumerate_oracle(build_carp_model(restrict_demand(tri, [0])))
    assert rec.X == ref.objective == 4.0
    walks = [v.walk for v in rec.routes.vehicles if v.walk]
    assert walks == [[1, 2, 1]]
    assert rec.post == (1.0, 0.8, 0.7)


def test_myopic_drops_highest_inventory_when_unroutable():
    net = triangle(K=1, W=9.5)
    router = Router(net)
    rec = myopic_decide(StateSnapshot(1, (0.1, 0.2, 0.3), (0.1,) * 3), 0.5, net, router)
    # 1-2-3-1 can service (1,2) and (1,3) within W = 9.5, not all three arcs
    assert rec.selected == (0, 1)
    assert len(rec.notes) == 1 and "(2,3)" in rec.notes[0]


TABLE1_R = [(0.387, 0.331, 0.276, 0.269), (0.453, 0.503, 0.410, 0.464),
            (0.463, 0.394, 0.560, 0.522), (0.426, 0.537, 0.590, 0.672)]
TABLE1_POST = [(0.613, 1.000, 0.724), (0.547, 1.000, 0.590), (0.537, 1.000, 0.440),
               (0.574, 1.000, 0.410)]


@pytest.mark.parametrize("rates, posts", list(zip(TABLE1_R, TABLE1_POST)))
def test_myopic_replays_table1(rates, posts):
    router = Router(SINGLE)
    s = 1.0
    got = []
    for t, r in enumerate(rates, start=1):
        state = StateSnapshot(t, (s - r,), (r,))
        if t in (1, 4):  # no decision at the first and last step of the table
            rec_post = s - r
        else:
            rec = myopic_decide(state, 0.33, SINGLE, router, rho=10.0)
            rec_post = rec.post[0]
        got.append(rec_post)
        s = rec_post
    np.testing.assert_allclose(got[:3], posts, atol=1e-3 + 1e-12)


def test_static_replay_and_errors(monroy):
    router = Router(monroy)
    sched = static_schedule(monroy, 3, [0.68] * monroy.m, [0.5] * monroy.m, 0.1, router)
    assert sched.source == "airp" and len(sched.periods) == 3
    a = static_decide(sched, StateSnapshot(1, (0.2,) * monroy.m, (0.5,) * monroy.m), monroy)
    b = static_decide(sched, StateSnapshot(1, (0.9,) * monroy.m, (0.1,) * monroy.m), monroy,
                      h=0.1)
    assert a.X == b.X and a.selected == b.selected and a.H != b.H
    for k in a.selected:
        assert a.post[k] == 1.0
    with pytest.raises(IndexError):
        static_decide(sched, StateSnapshot(4, (0.5,) * monroy.m, ()), monroy)


def test_static_falls_back_to_cyclic_when_airp_invalid(tri):
    router = Router(tri)
    sched = static_schedule(tri, 4, [1.0] * 3, [1.5] * 3, 0.1, router)  # r > q
    assert sched.source == "cyclic"
    empty = [p for p in sched.periods if not p[0]]
    rec = static_decide(sched, StateSnapshot(1, (0.5,) * 3, ()), tri)
    if not rec.selected:
        assert rec.X == 0.0
    assert len(sched.periods) == 4 and len(empty) < 4


def test_cyclic_plan():
    plan = cyclic_plan([0.6, 0.2, 1.0], [0.5, 0.5, 0.25], [1, 1, 0], 5)
    assert plan[:, 0].tolist() == [False, True, False, True, False]
    assert plan[:, 1].tolist() == [True, False, True, False, True]
    assert not plan[:, 2].any()


def _one_arc_tree(s, r, rho, cost, h, periods):
    """Best total cost and first action by enumerating every decision sequence."""
    best = None
    for seq in itertools.product([0, 1], repeat=periods):
        inv, total = s, 0.0
        for k, y in enumerate(seq):
            if k > 0:
                inv -= r
            total += rho * (inv < 0)
            if y:
                inv = 1.0
                total += cost
            total += h * max(inv, 0.0)
        if best is None or total < best[0] - 1e-12:
            best = (total, seq[0])
    return best


def test_lsm_serves_arc_about_to_stock_out():
    params = [OUParams(0.5, 0.1, 0.0, 0.5)]
    router = Router(SINGLE)
    cfg = SdairpConfig(horizon=2, paths=10, basis=3, rho=10.0, h=0.0, seed=1)
    rec = lsm_decide(StateSnapshot(1, (0.3,), (0.5,)), cfg, SINGLE, params, router)
    _, first = _one_arc_tree(0.3, 0.5, 10.0, 2.0, 0.0, 3)
    assert first == 1 and rec.selected == (0,)
    # plenty of stock: waiting is optimal in the tree and in the policy
    rec = lsm_decide(StateSnapshot(1, (0.9,), (0.5,)), cfg, SINGLE, params, router)
    assert _one_arc_tree(0.9, 0.5, 10.0, 2.0, 0.0, 3)[1] == 0 and rec.selected == ()


def test_lsm_negligible_stockout_cost_never_deploys(monroy):
    params = [OUParams(0.5, 0.1, 0.1, 0.5)] * monroy.m
    cfg = SdairpConfig(horizon=2, paths=20, basis=3, rho=1e-9, h=0.1, seed=3)
    rec = lsm_decide(StateSnapshot(1, (0.05,) * monroy.m, (0.5,) * monroy.m), cfg, monroy,
                     params, Router(monroy))
    assert rec.selected == () and rec.X == 0.0


def test_lsm_deterministic_across_threads(monroy):
    params = [OUParams(0.5, 0.1, 0.1, 0.5)] * monroy.m
    state = StateSnapshot(2, (0.3, 0.5, 0.7, 0.2, 0.9, 0.45, 0.6), (0.5,) * monroy.m)
    router = Router(monroy)
    out = []
    for threads in (1, 1, 3):
        trace = []
        cfg = SdairpConfig(horizon=3, paths=30, basis=4, rho=10.0, h=0.1, seed=5,
                           threads=threads)
        rec = lsm_decide(state, cfg, monroy, params, router, trace)
        out.append((rec.to_json(monroy), json.dumps(trace, sort_keys=True)))
    assert out[0] == out[1] == out[2]


def test_lsm_order_up_to(monroy):
    params = [OUParams(0.5, 0.1, 0.1, 0.5)] * monroy.m
    cfg = SdairpConfig(horizon=2, paths=20, basis=3, rho=10.0, h=0.1, seed=2)
    state = StateSnapshot(1, (0.1, -0.2, 0.6, 0.3, 0.9, 0.05, 0.4), (0.5,) * monroy.m)
    rec = lsm_decide(state, cfg, monroy, params, Router(monroy))
    assert rec.selected
    for a in range(monroy.m):
        assert rec.post[a] == (1.0 if a in rec.selected else state.s[a])
    assert rec.stockouts == (1,) and rec.O == 10.0
    assert rec.X == rec.routes.X


@pytest.mark.parametrize("kw", [dict(horizon=0), dict(paths=1), dict(basis=0), dict(rho=0.0),
                                dict(gamma=0.9), dict(a_priori="greedy")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SdairpConfig(**kw)


def test_decision_record_json(tri):
    rec = myopic_decide(StateSnapshot(3, (0.2, 0.8, -0.1), (0.1,) * 3), 0.5, tri, Router(tri),
                        h=0.1, rho=10.0)
    d = json.loads(rec.to_json(tri))
    assert d["t"] == 3 and d["selected"] == [[1, 2], [2, 3]]
    assert d["O"] == 10.0 and d["total"] == pytest.approx(rec.X + rec.H + rec.O)
    assert d["routes"]["X"] == rec.X
    assert isinstance(rec, DecisionRecord)


def test_routers_agree(monroy):
    table, milp = Router(monroy, "table"), Router(monroy, "milp")
    rng = np.random.default_rng(8)
    for _ in range(4):
        arcs = tuple(sorted(rng.choice(monroy.m, size=3, replace=False)))
        assert table.cost(arcs) == milp.cost(arcs)
        pi = rng.uniform(-5, 1, monroy.m)
        assert table.svrp(pi)[0] == pytest.approx(milp.svrp(pi)[0])
    with pytest.raises(ValueError):
        Router(monroy, "heuristic")
