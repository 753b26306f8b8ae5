"""Pure-Python/numpy versions of the kernels in ``_core.pyx``.

Every function performs the same floating-point operations in the same
order as its compiled twin, so switching backends never changes a result.
"""

import numpy as np

BASIC, AT_LOWER, AT_UPPER = 0, 1, 2


def dual_simplex(T, beta, d, basis, status, xval, lb, ub,
                 ftol, ptol, dtol, max_iter, bland_after, bland):
    m, n = T.shape
    it = 0
    degenerate = 0
    code = 2
    while it < max_iter:
        lbB = lb[basis]
        ubB = ub[basis]
        low = beta < lbB - ftol
        high = (~low) & (beta > ubB + ftol)
        infeasible = low | high
        if not infeasible.any():
            code = 0
            break
        if bland:
            rows = np.flatnonzero(infeasible)
            r = int(rows[np.argmin(basis[rows])])
        else:
            viol = np.where(low, lbB - beta, np.where(high, beta - ubB, 0.0))
            r = int(np.argmax(viol))
        leave = int(basis[r])
        below = bool(beta[r] < lb[leave])
        target = lb[leave] if below else ub[leave]

        row = T[r]
        movable = (status != BASIC) & (lb != ub)
        at_lower = status == AT_LOWER
        if below:
            ok = np.where(at_lower, row < -ptol, row > ptol)
        else:
            ok = np.where(at_lower, row > ptol, row < -ptol)
        cand = np.flatnonzero(movable & ok)
        if cand.size == 0:
            code = 1
            break
        ratios = np.abs(d[cand]) / np.abs(row[cand])
        alphas = np.abs(row[cand])
        j = -1
        best_ratio = 0.0
        best_alpha = 0.0
        for k, ratio, a in zip(cand.tolist(), ratios.tolist(), alphas.tolist()):
            if j < 0 or ratio < best_ratio - 1e-12:
                j, best_ratio, best_alpha = k, ratio, a
            elif ratio <= best_ratio + 1e-12 and not bland and a > best_alpha:
                j, best_ratio, best_alpha = k, ratio, a

        if best_ratio <= dtol:
            degenerate += 1
            if degenerate >= bland_after:
                bland = True
        else:
            degenerate = 0

        alpha = T[r, j]
        theta_p = (beta[r] - target) / alpha
        col = T[:, j]
        rows = np.flatnonzero(col != 0.0)
        beta[rows] -= theta_p * col[rows]
        beta[r] = xval[j] + theta_p

        nz = np.flatnonzero(row != 0.0)
        T[r, nz] = T[r, nz] / alpha
        rows = rows[rows != r]
        if rows.size:
            f = T[rows, j].copy()
            T[np.ix_(rows, nz)] -= np.outer(f, T[r, nz])
            T[rows, j] = 0.0
        dj = d[j]
        if dj != 0.0:
            d[nz] -= dj * T[r, nz]
        d[j] = 0.0

        basis[r] = j
        status[j] = BASIC
        status[leave] = AT_LOWER if below else AT_UPPER
        xval[leave] = target
        it += 1
    return code, it, bland


def ou_recurrence(r0, a, b, s, z):
    k, steps = z.shape
    out = np.empty((k, steps + 1), dtype=np.float64)
    out[:, 0] = r0
    for t in range(steps):
        out[:, t + 1] = out[:, t] * a + b + s * z[:, t]
    return out


def stockout_targets(x, rates, replenish, rho):
    P, L = rates.shape
    out = np.zeros(P, dtype=np.float64)
    inv = np.array(x, dtype=np.float64)
    live = np.ones(P, dtype=bool)
    for k in range(L):
        inv = inv - rates[:, k]
        hit = live & (inv < 0.0)
        out[hit] = rho
        live &= ~hit
        live &= ~replenish[:, k].astype(bool)
    return out
