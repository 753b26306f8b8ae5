"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Reports best-of-N wall time per kernel and backend and checks that both
backends return identical results.
"""

import argparse
import time

import numpy as np

from sdairp import _backend
from sdairp.milp import LinearModel, solve_mip


def _ou_case(rng):
    n, steps = 20000, 20
    r0 = rng.uniform(0.2, 0.6, n)
    a = np.full(n, np.exp(-0.1))
    b = 0.5 * (1 - a)
    s = np.full(n, 0.095)
    z = np.ascontiguousarray(rng.standard_normal((n, steps)))
    return lambda k: k.ou_recurrence(r0, a, b, s, z)


def _targets_case(rng):
    P, L = 20000, 10
    x = rng.uniform(0, 1, P)
    rates = np.ascontiguousarray(rng.uniform(0.2, 0.6, (P, L)))
    flags = np.ascontiguousarray((rng.random((P, L)) < 0.3).astype(np.uint8))
    return lambda k: k.stockout_targets(x, rates, flags, 10.0)


def _mip_case(rng):
    model = LinearModel(sense="max")
    v = [model.add_binary(f"b{i}") for i in range(14)]
    for _ in range(8):
        model.add_constr({k: float(rng.integers(1, 9)) for k in v if rng.random() < 0.7},
                         "<=", float(rng.integers(10, 25)))
    model.set_objective({k: float(rng.integers(1, 12)) for k in v})

    def run(_kernels):
        return solve_mip(model).objective

    return run


CASES = {"ou_recurrence": _ou_case, "stockout_targets": _targets_case,
         "branch_and_bound": _mip_case}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        from sdairp import _core  # noqa: F401
    except ImportError:
        print("compiled extension not built; only the fallback is available")
        backends = ["python"]
    else:
        backends = ["cython", "python"]
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + "   same")
    for name, make in CASES.items():
        fn = make(np.random.default_rng(0))
        times, outs = [], []
        for b in backends:
            _backend.use(b)
            best = np.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                out = fn(_backend.kernels)
                best = min(best, time.perf_counter() - t0)
            times.append(best)
            outs.append(np.asarray(out))
        same = all(np.array_equal(outs[0], o) for o in outs[1:])
        print(f"{name:<18}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + f"   {same}")


if __name__ == "__main__":
    main()
