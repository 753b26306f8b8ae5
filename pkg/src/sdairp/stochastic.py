"""Ornstein-Uhlenbeck consumption rates and reproducible sample paths.

Noise streams use numpy's Philox counter-based generator. Each (path, arc)
pair gets its own stream, keyed by ``SeedSequence((seed, *namespace, p, a))``,
so any subset of paths can be regenerated on its own and the output does not
depend on evaluation order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _backend


@dataclass(frozen=True)
class OUParams:
    mu: float
    theta: float
    sigma: float
    r0: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"reversion rate theta must be > 0, got {self.theta}")
        if self.sigma < 0:
            raise ValueError(f"volatility sigma must be >= 0, got {self.sigma}")

    def coefficients(self, dt: float = 1.0) -> tuple[float, float, float]:
        """``(a, b, s)`` with ``r' = a r + b + s z``."""
        if not dt > 0:
            raise ValueError("dt must be > 0")
        a = math.exp(-self.theta * dt)
        b = self.mu * (1.0 - a)
        s = self.sigma * math.sqrt((1.0 - math.exp(-2.0 * self.theta * dt)) / (2.0 * self.theta))
        return a, b, s

    def mean(self, t: float, r0: float | None = None) -> float:
        r0 = self.r0 if r0 is None else r0
        return self.mu + (r0 - self.mu) * math.exp(-self.theta * t)

    def variance(self, t: float) -> float:
        return self.sigma ** 2 * (1.0 - math.exp(-2.0 * self.theta * t)) / (2.0 * self.theta)


def ou_exact_step(r: float, params: OUParams, dt: float, z: float) -> float:
    a, b, s = params.coefficients(dt)
    return r * a + b + s * z


def normal_streams(seed: int, namespace: tuple, P: int, A: int, steps: int,
                   paths=None) -> np.ndarray:
    """Standard normals of shape ``(len(paths), A, steps)``."""
    paths = range(P) if paths is None else paths
    z = np.empty((len(paths), A, steps))
    for k, p in enumerate(paths):
        for a in range(A):
            ss = np.random.SeedSequence([int(seed), *map(int, namespace), int(p), int(a)])
            z[k, a] = np.random.Generator(np.random.Philox(ss)).standard_normal(steps)
    return z


@dataclass
class PathMatrix:
    """``rates[p, t, a]`` for periods ``t = 0..horizon``; row 0 holds r0."""

    rates: np.ndarray
    seed: int

    @property
    def P(self) -> int:
        return self.rates.shape[0]

    @property
    def horizon(self) -> int:
        return self.rates.shape[1] - 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "period", "arc", "rate"])
        P, T1, A = self.rates.shape
        for p in range(P):
            for t in range(T1):
                for a in range(A):
                    w.writerow([p, t, a, repr(float(self.rates[p, t, a]))])
        return buf.getvalue()


def simulate_paths(params, P: int, horizon: int, seed: int, namespace: tuple = (0,),
                   r0=None, dt: float = 1.0) -> PathMatrix:
    """Simulate ``P`` independent rate paths for every arc.

    ``params`` is a sequence of :class:`OUParams`, one per arc; ``r0``
    overrides their starting rates (used when re-simulating from an observed
    state).
    """
    if P < 1 or horizon < 1:
        raise ValueError("need P >= 1 and horizon >= 1")
    params = list(params)
    A = len(params)
    start = np.array([p.r0 for p in params] if r0 is None else r0, dtype=float)
    coef = np.array([p.coefficients(dt) for p in params])
    z = normal_streams(seed, namespace, P, A, horizon)
    flat = np.ascontiguousarray(z.reshape(P * A, horizon))
    out = _backend.kernels.ou_recurrence(
        np.ascontiguousarray(np.tile(start, P)), np.ascontiguousarray(np.tile(coef[:, 0], P)),
        np.ascontiguousarray(np.tile(coef[:, 1], P)), np.ascontiguousarray(np.tile(coef[:, 2], P)),
        flat)
    rates = np.asarray(out).reshape(P, A, horizon + 1).transpose(0, 2, 1).copy()
    return PathMatrix(rates, int(seed))
