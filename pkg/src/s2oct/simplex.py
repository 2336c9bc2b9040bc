"""Dense two-phase primal simplex with explicit variable bounds.

Intended for the tiny LPs of the enumeration oracle: a few dozen columns at
most. Bland's rule is used for both the entering and the leaving variable,
so the method terminates on degenerate problems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LPInfeasible, LPUnbounded

COST_TOL = 1e-9
PIVOT_TOL = 1e-10
PHASE1_TOL = 1e-7
MAX_ITER = 50_000


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int


def _iterate(A, b, cost, lo, up, x, basis, max_iter):
    m, ncol = A.shape
    in_basis = np.zeros(ncol, dtype=bool)
    in_basis[basis] = True
    for it in range(max_iter):
        nonbasic = np.flatnonzero(~in_basis)
        Binv = np.linalg.inv(A[:, basis])
        x[basis] = Binv @ (b - A[:, nonbasic] @ x[nonbasic])
        d = cost - (cost[basis] @ Binv) @ A
        enter, direction = -1, 0
        for j in nonbasic:
            if d[j] < -COST_TOL and x[j] < up[j]:
                enter, direction = j, 1
                break
            if d[j] > COST_TOL and x[j] > lo[j]:
                enter, direction = j, -1
                break
        if enter < 0:
            return it
        col = Binv @ A[:, enter]
        theta = up[enter] - lo[enter]
        leave, leave_to = -1, 0.0
        for k, i in enumerate(basis):
            delta = -direction * col[k]
            if delta < -PIVOT_TOL:
                bound = lo[i]
                lim = (x[i] - bound) / -delta
            elif delta > PIVOT_TOL:
                bound = up[i]
                lim = (bound - x[i]) / delta
            else:
                continue
            lim = max(lim, 0.0)
            if lim < theta - 1e-13 or (lim <= theta + 1e-13 and leave >= 0 and i < basis[leave]):
                theta, leave, leave_to = lim, k, bound
        if math.isinf(theta):
            raise LPUnbounded("objective is unbounded below")
        x[enter] += direction * theta
        x[basis] -= direction * theta * col
        if leave < 0:
            # bound flip: entering variable crosses to its other bound
            x[enter] = up[enter] if direction > 0 else lo[enter]
            continue
        out = basis[leave]
        x[out] = leave_to
        in_basis[out] = False
        in_basis[enter] = True
        basis[leave] = enter
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(c, A, senses, b, lower, upper, max_iter: int = MAX_ITER) -> LPResult:
    """Minimize ``c @ x`` subject to ``A x (senses) b`` and ``lower <= x <= upper``.

    ``senses`` holds one of ``"<="``, ``">="``, ``"="`` per row; bounds may be
    infinite. Raises :class:`LPInfeasible` or :class:`LPUnbounded`.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    lo = np.asarray(lower, dtype=float)
    up = np.asarray(upper, dtype=float)
    nrow, n = A.shape
    if np.any(lo > up):
        raise LPInfeasible("a variable has lower bound above upper bound")

    slack_lo = np.array([0.0 if s in ("<=", "=") else -np.inf for s in senses])
    slack_up = np.array([0.0 if s in (">=", "=") else np.inf for s in senses])
    A1 = np.hstack([A, np.eye(nrow)])
    lo1 = np.concatenate([lo, slack_lo])
    up1 = np.concatenate([up, slack_up])
    x = np.where(np.isfinite(lo1), lo1, np.where(np.isfinite(up1), up1, 0.0))
    resid = b - A1 @ x
    sign = np.where(resid >= 0, 1.0, -1.0)
    A2 = np.hstack([A1, np.diag(sign)])
    lo2 = np.concatenate([lo1, np.zeros(nrow)])
    up2 = np.concatenate([up1, np.full(nrow, np.inf)])
    x = np.concatenate([x, np.abs(resid)])
    basis = list(range(n + nrow, n + 2 * nrow))

    phase1 = np.concatenate([np.zeros(n + nrow), np.ones(nrow)])
    it1 = _iterate(A2, b, phase1, lo2, up2, x, basis, max_iter)
    infeas = float(x[n + nrow :].sum())
    if infeas > PHASE1_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
        raise LPInfeasible(f"phase 1 ended with infeasibility {infeas:.3g}")

    up2[n + nrow :] = 0.0
    x[n + nrow :] = np.minimum(x[n + nrow :], 0.0)
    cost = np.concatenate([c, np.zeros(2 * nrow)])
    it2 = _iterate(A2, b, cost, lo2, up2, x, basis, max_iter)
    xs = x[:n].copy()
    return LPResult(xs, float(c @ xs), it1 + it2)
