"""Exhaustive-enumeration optimum of the semi-supervised tree problem.

Every assignment of labeled points to a leaf of their class and every
left/right decision of the unlabeled points at every branch node is tried.
With those choices fixed, the cardinality slack is a constant and the rest
is an LP in ``(omega, gamma, y)``, solved by :func:`s2oct.simplex.solve_lp`.
This path shares no code with the MILP builder or the MIP backend.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, TreeParams, TreeTopology
from .errors import LPInfeasible, SizeError
from .model import ModelParams
from .simplex import solve_lp

DEFAULT_GUARD = 2**20
TIE_TOL = 1e-9


@dataclass(frozen=True)
class OracleResult:
    objective: float
    alpha: tuple[int, ...]
    z: tuple[tuple[int, ...], ...]
    xi: float
    tree: TreeParams
    assignments: int
    feasible_assignments: int


def assignment_count(dataset: Dataset, topology: TreeTopology) -> int:
    nb = len(topology.branch_nodes)
    count = 1
    for c in dataset.labels:
        count *= len(topology.leaves_of(c))
    return count * 2 ** (dataset.m * nb)


def leaf_from_decisions(topology: TreeTopology, z: tuple[int, ...]) -> int:
    """Leaf reached when branch node ``b`` goes right iff ``z[b-1] == 1``."""
    b = 1
    while b < 2**topology.depth:
        b = 2 * b + z[b - 1]
    return b


def _fixed_lp(dataset, topology, params, alpha, z):
    p = dataset.p
    nb = len(topology.branch_nodes)
    n_tree = nb * (p + 1)
    # columns: omega (nb*p), gamma (nb), then one y per path edge of each labeled point
    edges = []
    for i, t in enumerate(alpha):
        edges += [(i, b, "R") for b in sorted(topology.right_path[t])]
        edges += [(i, b, "L") for b in sorted(topology.left_path[t])]
    ncol = n_tree + len(edges)

    def margin_row(b, x):
        row = np.zeros(ncol)
        row[(b - 1) * p : b * p] = x
        row[nb * p + b - 1] = -1.0
        return row

    rows, senses, rhs = [], [], []
    for k, (i, b, side) in enumerate(edges):
        mr = margin_row(b, dataset.labeled[i])
        row = -mr if side == "R" else mr
        row[n_tree + k] = -1.0
        # +/-(w.x - g) + 1 <= y
        rows.append(row)
        senses.append("<=")
        rhs.append(-1.0)
    M = params.big_m
    for x, zi in zip(dataset.unlabeled, z):
        for b in topology.branch_nodes:
            mr = margin_row(b, x)
            if zi[b - 1]:
                rows += [mr, mr]
                senses += [">=", "<="]
                rhs += [1.0, M - 1.0]
            else:
                rows += [mr, mr]
                senses += ["<=", ">="]
                rhs += [-1.0, 1.0 - M]
    lower = np.concatenate([np.full(nb * p, -params.s), np.full(nb, -np.inf), np.zeros(len(edges))])
    upper = np.concatenate([np.full(nb * p, params.s), np.full(nb, np.inf), np.full(len(edges), np.inf)])
    cost = np.concatenate([np.zeros(n_tree), np.ones(len(edges))])
    if not rows:
        rows = [np.zeros(ncol)]
        senses, rhs = ["<="], [0.0]
    return cost, np.array(rows), senses, np.array(rhs), lower, upper


def enumerate_optimum(
    dataset: Dataset,
    topology: TreeTopology,
    params: ModelParams,
    guard: int = DEFAULT_GUARD,
) -> OracleResult:
    total = assignment_count(dataset, topology)
    if total > guard:
        raise SizeError(f"{total} assignments exceed the enumeration guard {guard}")
    nb = len(topology.branch_nodes)
    p = dataset.p
    alpha_sets = [topology.leaves_of(c) for c in dataset.labels]
    z_sets = list(itertools.product((0, 1), repeat=nb))

    best = math.inf
    best_key = None
    best_x = None
    feasible = 0
    for alpha in itertools.product(*alpha_sets):
        for z in itertools.product(z_sets, repeat=dataset.m):
            count_a = sum(leaf_from_decisions(topology, zi) % 2 == 0 for zi in z)
            xi = float(abs(count_a - params.lam))
            floor = params.C * xi
            if floor >= best - TIE_TOL:
                continue
            try:
                lp = solve_lp(*_fixed_lp(dataset, topology, params, alpha, z))
            except LPInfeasible:
                continue
            feasible += 1
            obj = lp.objective + floor
            if obj < best - TIE_TOL:
                best, best_key, best_x = obj, (alpha, z, xi), lp.x
    if best_key is None:
        raise LPInfeasible("no assignment admits a feasible hyperplane configuration")
    alpha, z, xi = best_key
    omega = best_x[: nb * p].reshape(nb, p)
    gamma = best_x[nb * p : nb * (p + 1)]
    return OracleResult(best, tuple(alpha), tuple(z), xi, TreeParams(omega, gamma), total, feasible)
