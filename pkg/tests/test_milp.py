import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from sdairp import _backend
from sdairp.milp import (INFEASIBLE, NODE_LIMIT, OPTIMAL, UNBOUNDED, LinearModel, ModelError,
                         SolverConfig, enumerate_oracle, solve_lp, solve_mip)


def test_tiny_lp_and_mip():
    m = LinearModel()
    x = m.add_var("x", 0, 10)
    m.add_constr({x: 1}, ">=", 3)
    m.set_objective({x: 1})
    assert solve_lp(m).objective == pytest.approx(3.0)

    m = LinearModel()
    a, b = m.add_binary("a"), m.add_binary("b")
    m.add_constr({a: 1, b: 1}, "<=", 1)
    m.set_objective({a: 3, b: 2}, "max")
    sol = solve_mip(m)
    assert sol.status == OPTIMAL and sol.objective == 3.0
    assert list(sol.x) == [1.0, 0.0]


def test_infeasible_and_unbounded():
    m = LinearModel()
    a, b = m.add_binary("a"), m.add_binary("b")
    m.add_constr({a: 1, b: 1}, ">=", 3)
    assert solve_mip(m).status == INFEASIBLE
    assert enumerate_oracle(m).status == INFEASIBLE

    m = LinearModel()
    x = m.add_var("x", 0)
    m.set_objective({x: -1})
    assert solve_lp(m).status == UNBOUNDED


def test_degenerate_lp_terminates():
    # Beale's cycling example: degenerate vertex at the origin, redundant rows
    m = LinearModel(sense="min")
    x = [m.add_var(f"x{i}", 0) for i in range(4)]
    m.add_constr({x[0]: 0.25, x[1]: -60, x[2]: -0.04, x[3]: 9}, "<=", 0)
    m.add_constr({x[0]: 0.5, x[1]: -90, x[2]: -0.02, x[3]: 3}, "<=", 0)
    m.add_constr({x[2]: 1}, "<=", 1)
    m.add_constr({x[2]: 2}, "<=", 2)
    m.add_constr({x[0]: 0, x[1]: 0}, "<=", 0)
    m.set_objective({x[0]: -0.75, x[1]: 150, x[2]: -0.02, x[3]: 6})
    sol = solve_lp(m)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-0.05)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10_000))
def test_lp_matches_highs(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(2, 7)), int(rng.integers(1, 6))
    A = rng.integers(-4, 5, size=(k, n)).astype(float)
    b = rng.integers(0, 10, size=k).astype(float)
    c = rng.integers(-5, 6, size=n).astype(float)
    ub = rng.integers(1, 6, size=n).astype(float)
    m = LinearModel()
    v = [m.add_var(f"x{i}", 0, ub[i]) for i in range(n)]
    for r in range(k):
        m.add_constr({v[i]: A[r, i] for i in range(n)}, "<=", b[r])
    m.set_objective({v[i]: c[i] for i in range(n)})
    ref = linprog(c, A_ub=A, b_ub=b, bounds=list(zip([0] * n, ub)), method="highs")
    sol = solve_lp(m)
    if ref.status == 2:
        assert sol.status == INFEASIBLE
    else:
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(ref.fun, abs=1e-7)


def _random_mip(rng):
    nb, nc = int(rng.integers(3, 11)), int(rng.integers(0, 4))
    m = LinearModel(sense=str(rng.choice(["min", "max"])))
    v = [m.add_binary(f"b{i}") for i in range(nb)]
    v += [m.add_var(f"c{i}", 0, float(rng.uniform(1, 5))) for i in range(nc)]
    for _ in range(int(rng.integers(2, 8))):
        co = {k: float(rng.integers(-5, 6)) for k in v if rng.random() < 0.6}
        m.add_constr(co, str(rng.choice(["<=", ">=", "="], p=[.5, .35, .15])),
                     float(rng.integers(-3, 8)))
    m.set_objective({k: float(rng.integers(-9, 10)) + (rng.random() if k >= nb else 0)
                     for k in v})
    return m


@pytest.mark.parametrize("backend", ["cython", "python"])
def test_mip_matches_oracle(backend):
    old = _backend.use(backend)
    try:
        rng = np.random.default_rng(11)
        for _ in range(25):
            m = _random_mip(rng)
            a, b = solve_mip(m), enumerate_oracle(m)
            assert a.status == b.status
            if a.status == OPTIMAL:
                assert a.objective == pytest.approx(b.objective, abs=1e-6)
                assert m.is_feasible(a.x)
    finally:
        _backend.use(old)


def test_node_limit_reports_status():
    rng = np.random.default_rng(3)
    m = LinearModel(sense="max")
    v = [m.add_binary(f"b{i}") for i in range(18)]
    for _ in range(6):
        m.add_constr({k: float(rng.integers(3, 20)) for k in v}, "<=", 40.5)
    m.set_objective({k: float(rng.integers(3, 20)) + rng.random() for k in v})
    sol = solve_mip(m, SolverConfig(node_limit=2))
    assert sol.status == NODE_LIMIT
    full = solve_mip(m)
    assert full.objective == pytest.approx(enumerate_oracle(m).objective)


def test_model_validation_and_lp_export():
    m = LinearModel()
    x = m.add_var("x", 0, 1)
    with pytest.raises(ModelError):
        m.add_var("x")
    with pytest.raises(ModelError):
        m.add_constr({x: 1}, "<", 1)
    with pytest.raises(ModelError):
        m.add_var("y", 2, 1)
    with pytest.raises(ModelError):
        SolverConfig(feas_tol=0)
    m.add_constr({x: 2}, "<=", 1, name="cap")
    m.set_objective({x: 1}, "max")
    text = m.to_lp()
    assert "cap" in text and "Maximize" in text
