import math

import numpy as np
import pytest

from sdairp import _backend
from sdairp.stochastic import (OUParams, PathMatrix, normal_streams, ou_exact_step,
                               simulate_paths)

P23 = OUParams(0.5, 0.1, 0.1, 0.5)


def test_exact_step_closed_form():
    assert ou_exact_step(0.33, P23, 1.0, 0.0) == pytest.approx(0.346178, abs=1e-6)
    a, b, s = P23.coefficients(1.0)
    assert a == pytest.approx(math.exp(-0.1))
    assert s == pytest.approx(0.1 * math.sqrt((1 - math.exp(-0.2)) / 0.2))
    assert ou_exact_step(0.33, P23, 1.0, 1.5) == pytest.approx(0.33 * a + b + 1.5 * s)


@pytest.mark.parametrize("kw", [dict(theta=0.0), dict(theta=-1.0), dict(sigma=-0.1)])
def test_invalid_parameters(kw):
    base = dict(mu=0.5, theta=0.1, sigma=0.1, r0=0.5)
    base.update(kw)
    with pytest.raises(ValueError):
        OUParams(**base)


def test_moments():
    assert P23.mean(0.0, 0.3) == pytest.approx(0.3)
    assert P23.mean(1e6, 0.3) == pytest.approx(0.5)
    assert P23.variance(1e6) == pytest.approx(0.05)


def test_zero_volatility_is_deterministic():
    p = OUParams(0.5, 0.3, 0.0, 0.2)
    rates = simulate_paths([p], 4, 6, seed=1).rates[:, :, 0]
    expected = [p.mean(t) for t in range(7)]
    for row in rates:
        np.testing.assert_allclose(row, expected, rtol=0, atol=1e-15)


def test_path_shape_and_initial_row():
    params = [P23, OUParams(0.2, 0.3, 0.02, 0.1)]
    pm = simulate_paths(params, 5, 3, seed=9)
    assert pm.rates.shape == (5, 4, 2) and (pm.P, pm.horizon) == (5, 3)
    np.testing.assert_array_equal(pm.rates[:, 0, 0], 0.5)
    np.testing.assert_array_equal(pm.rates[:, 0, 1], 0.1)
    pm2 = simulate_paths(params, 5, 3, seed=9, r0=[0.4, 0.3])
    np.testing.assert_array_equal(pm2.rates[:, 0], [[0.4, 0.3]] * 5)


def test_streams_are_keyed_per_path_and_arc():
    full = normal_streams(3, (0,), 6, 2, 4)
    part = normal_streams(3, (0,), 6, 2, 4, paths=[4, 1])
    np.testing.assert_array_equal(part, full[[4, 1]])
    # more arcs or more paths leave existing streams unchanged
    wider = normal_streams(3, (0,), 9, 3, 4)
    np.testing.assert_array_equal(wider[:6, :2], full)


def test_namespaces_are_disjoint():
    a = normal_streams(3, (0,), 2, 1, 5)
    b = normal_streams(3, (1, 1), 2, 1, 5)
    assert not np.allclose(a, b)


def test_recurrence_matches_scalar_step():
    pm = simulate_paths([P23], 3, 4, seed=2)
    z = normal_streams(2, (0,), 3, 1, 4)
    for p in range(3):
        r = 0.5
        for t in range(4):
            r = ou_exact_step(r, P23, 1.0, z[p, 0, t])
            assert pm.rates[p, t + 1, 0] == pytest.approx(r, abs=1e-14)


def test_backends_agree_bitwise():
    params = [P23, OUParams(0.3, 0.2, 0.05, 0.4)]
    old = _backend.use("python")
    try:
        py = simulate_paths(params, 20, 8, seed=4).rates
        _backend.use("cython")
        cy = simulate_paths(params, 20, 8, seed=4).rates
    finally:
        _backend.use(old)
    np.testing.assert_array_equal(py, cy)


def test_csv_layout():
    pm = PathMatrix(np.arange(8, dtype=float).reshape(2, 2, 2), seed=0)
    lines = pm.to_csv().splitlines()
    assert lines[0] == "path,period,arc,rate"
    assert lines[1] == "0,0,0,0.0" and lines[-1] == "1,1,1,7.0"
    assert len(lines) == 9


def test_invalid_sizes():
    with pytest.raises(ValueError):
        simulate_paths([P23], 0, 3, seed=1)
    with pytest.raises(ValueError):
        P23.coefficients(0.0)
