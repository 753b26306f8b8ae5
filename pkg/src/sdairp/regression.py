"""Probabilists' Hermite basis and least-squares fits of stock-out cost.

The fit uses an SVD-based minimum-norm solve. The raw coefficients of a
degree-5 fit on inventory levels in [0, 1] are badly conditioned, so only
the fitted values (the projection onto the basis span) are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def hermite_eval(n: int, x):
    """He_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur


def basis(x, M: int) -> np.ndarray:
    """Design matrix ``[He_0(x), ..., He_M(x)]``, shape ``(len(x), M + 1)``."""
    if M < 1:
        raise ValueError("basis size M must be >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cols = np.empty((x.size, M + 1))
    cols[:, 0] = 1.0
    cols[:, 1] = x
    for k in range(1, M):
        cols[:, k + 1] = x * cols[:, k] - k * cols[:, k - 1]
    return cols


@dataclass(frozen=True)
class FitResult:
    beta: np.ndarray
    fitted: np.ndarray
    rank: int
    condition: float
    M: int

    def predict(self, x, clamp: float | None = None) -> np.ndarray:
        return predict(self, x, clamp)


def fit(xs, ys, M: int) -> FitResult:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 1:
        raise ValueError("xs and ys must be equal-length 1-d arrays")
    X = basis(xs, M)
    beta, _, rank, sv = np.linalg.lstsq(X, ys, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else float("inf")
    return FitResult(beta, X @ beta, int(rank), cond, M)


def zero_fit(M: int) -> FitResult:
    """The fit used at the end of the horizon: predicts 0 everywhere."""
    return FitResult(np.zeros(M + 1), np.zeros(0), 0, 1.0, M)


def predict(result: FitResult, x, clamp: float | None = None) -> np.ndarray:
    """``beta . basis(x)``, optionally clipped to ``[0, clamp]``."""
    out = basis(x, result.M) @ result.beta
    if clamp is not None:
        out = np.clip(out, 0.0, clamp)
    return out


def rss(result: FitResult, ys) -> float:
    return float(np.sum((np.asarray(ys, dtype=float) - result.fitted) ** 2))
