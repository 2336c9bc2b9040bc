"""MILP construction for the semi-supervised tree and its labeled-only baseline.

The models are emitted as a small solver-agnostic intermediate representation
(:class:`MilpModel`) that the :mod:`s2oct.solve` module serializes to MPS.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import Dataset, TreeParams, TreeTopology
from .errors import BuildError, ParameterError, SolutionIntegrityError

INTEGRALITY_TOL = 1e-6
FEASIBILITY_TOL = 1e-6

CONTINUOUS = "C"
BINARY = "B"

Terms = tuple[tuple[int, float], ...]


# ---------------------------------------------------------------------------
# parameters


def compute_eta(X, chunk: int = 2048) -> float:
    """Largest Euclidean distance between any two rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise ParameterError("eta needs at least two points")
    best = 0.0
    sq = np.einsum("ij,ij->i", X, X)
    for start in range(0, X.shape[0], chunk):
        blk = X[start : start + chunk]
        d2 = sq[start : start + chunk, None] + sq[None, :] - 2.0 * blk @ X.T
        best = max(best, float(d2.max()))
    return math.sqrt(max(best, 0.0))


def compute_big_m(eta: float, s: float, p: int) -> float:
    return eta * s * math.sqrt(p) + 1.0


def compute_bound_b(depth: int, eta: float, s: float, p: int) -> float:
    return depth * (eta * s * math.sqrt(p) + 1.0)


def default_s(N: int, eta: float, p: int) -> float:
    if eta <= 0:
        raise ParameterError("default_s needs eta > 0")
    floor = 10.0 if N < 650 else 20.0 if N < 1500 else 40.0
    return max(floor, 499.0 / (eta * math.sqrt(p)))


def default_depth(N: int) -> int:
    return 2 if N < 1000 else 3


@dataclass(frozen=True)
class ModelParams:
    depth: int
    s: float
    C: float
    lam: int
    eta: float
    p: int
    big_m: float
    bound_b: float
    clamp_gamma: bool = False

    def __post_init__(self):
        if self.s <= 0:
            raise ParameterError(f"s must be positive, got {self.s}")
        if self.C <= 0:
            raise ParameterError(f"C must be positive, got {self.C}")
        if self.lam < 0:
            raise ParameterError(f"lambda must be nonnegative, got {self.lam}")
        if self.eta < 0:
            raise ParameterError(f"eta must be nonnegative, got {self.eta}")

    @classmethod
    def for_dataset(
        cls,
        dataset: Dataset,
        *,
        depth: Optional[int] = None,
        s: Optional[float] = None,
        C: float = 1.0,
        lam: int = 0,
        eta: Optional[float] = None,
        big_m: Optional[float] = None,
        clamp_gamma: bool = False,
    ) -> "ModelParams":
        """Fill every scalar from ``dataset`` using the default rules."""
        if eta is None:
            eta = compute_eta(dataset.points)
        p = dataset.p
        if depth is None:
            depth = default_depth(dataset.N)
        if s is None:
            s = default_s(dataset.N, eta, p)
        if big_m is None:
            big_m = compute_big_m(eta, s, p)
        return cls(
            depth=int(depth),
            s=float(s),
            C=float(C),
            lam=int(lam),
            eta=float(eta),
            p=p,
            big_m=float(big_m),
            bound_b=compute_bound_b(depth, eta, s, p),
            clamp_gamma=clamp_gamma,
        )


# ---------------------------------------------------------------------------
# intermediate representation


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: float
    upper: float


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: Terms
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    name: str
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: Terms
    # omega_b . x_i - gamma_b for every modeled (b, i); used for polishing
    margins: tuple[tuple[str, Terms], ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        index = {}
        for k, v in enumerate(self.variables):
            if v.name in index:
                raise BuildError(f"duplicate variable name {v.name}")
            index[v.name] = k
        nv = len(self.variables)
        for c in self.constraints:
            for j, _ in c.terms:
                if not 0 <= j < nv:
                    raise BuildError(f"constraint {c.name} references undeclared column {j}")
        object.__setattr__(self, "_index", index)

    @property
    def index(self) -> dict[str, int]:
        return self._index

    def var(self, name: str) -> int:
        return self._index[name]

    def has(self, name: str) -> bool:
        return name in self._index

    def names(self, prefix: str) -> list[str]:
        return [v.name for v in self.variables if v.name.split("_", 1)[0] == prefix]

    @property
    def n_continuous(self) -> int:
        return sum(v.kind == CONTINUOUS for v in self.variables)

    @property
    def n_binary(self) -> int:
        return sum(v.kind == BINARY for v in self.variables)

    def constraints_with_prefix(self, prefix: str) -> list[Constraint]:
        return [c for c in self.constraints if c.name.split("_", 1)[0] == prefix]

    def objective_value(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return float(sum(a * values[j] for j, a in self.objective))

    def activity(self, c: Constraint, values) -> float:
        return float(sum(a * values[j] for j, a in c.terms))

    def max_violation(self, values) -> float:
        """Largest absolute violation of any row or column bound at ``values``."""
        values = np.asarray(values, dtype=float)
        worst = 0.0
        for c in self.constraints:
            act = self.activity(c, values)
            if c.sense == "<=":
                viol = act - c.rhs
            elif c.sense == ">=":
                viol = c.rhs - act
            else:
                viol = abs(act - c.rhs)
            worst = max(worst, viol)
        for v, x in zip(self.variables, values):
            worst = max(worst, v.lower - x, x - v.upper)
        return worst

    def margin_values(self, values) -> dict[str, float]:
        values = np.asarray(values, dtype=float)
        return {name: float(sum(a * values[j] for j, a in terms)) for name, terms in self.margins}


class _Builder:
    def __init__(self):
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.index: dict[str, int] = {}

    def var(self, name, kind=CONTINUOUS, lower=0.0, upper=math.inf) -> int:
        self.index[name] = len(self.variables)
        self.variables.append(Variable(name, kind, float(lower), float(upper)))
        return self.index[name]

    def con(self, name, terms: Iterable[tuple[int, float]], sense, rhs):
        merged: dict[int, float] = {}
        for j, a in terms:
            merged[j] = merged.get(j, 0.0) + float(a)
        tt = tuple((j, a) for j, a in sorted(merged.items()) if a != 0.0)
        self.constraints.append(Constraint(name, tt, sense, float(rhs)))


def _check_build(dataset: Dataset, topology: TreeTopology, params: ModelParams):
    if params.depth != topology.depth:
        raise BuildError(f"params depth {params.depth} != topology depth {topology.depth}")
    if params.p != dataset.p:
        raise BuildError(f"params p {params.p} != dataset p {dataset.p}")
    if params.eta <= 0:
        raise ParameterError("eta = 0: all points coincide, no hyperplane can separate them")
    if dataset.n < 1:
        raise BuildError("at least one labeled point is required")


def _tree_block(b: _Builder, dataset: Dataset, topology: TreeTopology, params: ModelParams):
    """Hyperplane variables, branch errors, and the min-leaf-error linearization."""
    p, n = dataset.p, dataset.n
    gbound = math.inf
    if params.clamp_gamma:
        gbound = params.eta * params.s * math.sqrt(p) + float(np.abs(dataset.points).max()) * params.s * p
    for bn in topology.branch_nodes:
        for j in range(1, p + 1):
            b.var(f"w_{bn}_{j}", lower=-params.s, upper=params.s)
    for bn in topology.branch_nodes:
        b.var(f"g_{bn}", lower=-gbound, upper=gbound)
    for side in ("yR", "yL"):
        for bn in topology.branch_nodes:
            for i in range(1, n + 1):
                b.var(f"{side}_{bn}_{i}")
    for i, c in enumerate(dataset.labels, start=1):
        for t in topology.leaves_of(c):
            b.var(f"beta_{i}_{t}", upper=params.bound_b)

    def margin(bn, x):
        ix = b.index
        terms = [(ix[f"w_{bn}_{j}"], x[j - 1]) for j in range(1, p + 1)]
        terms.append((ix[f"g_{bn}"], -1.0))
        return terms

    margins = []
    for i, x in enumerate(dataset.labeled, start=1):
        for bn in topology.branch_nodes:
            margins.append((f"m_{bn}_{i}", tuple(margin(bn, x))))
    return margin, margins


def _labeled_constraints(b: _Builder, dataset: Dataset, topology: TreeTopology, params: ModelParams, margin):
    ix = b.index
    B = params.bound_b
    for i, x in enumerate(dataset.labeled, start=1):
        for bn in topology.branch_nodes:
            mt = margin(bn, x)
            # yR >= -(w.x - g) + 1 ; yL >= (w.x - g) + 1
            b.con(f"c1_{bn}_{i}", [(ix[f"yR_{bn}_{i}"], 1.0)] + mt, ">=", 1.0)
            b.con(f"c2_{bn}_{i}", [(ix[f"yL_{bn}_{i}"], 1.0)] + [(j, -a) for j, a in mt], ">=", 1.0)
    for i, c in enumerate(dataset.labels, start=1):
        leaves = topology.leaves_of(c)
        b.con(f"sumalpha_{i}", [(ix[f"alpha_{i}_{t}"], 1.0) for t in leaves], "=", 1.0)
        for t in leaves:
            le = [(ix[f"yR_{bn}_{i}"], 1.0) for bn in sorted(topology.right_path[t])]
            le += [(ix[f"yL_{bn}_{i}"], 1.0) for bn in sorted(topology.left_path[t])]
            neg_le = [(j, -a) for j, a in le]
            beta, alpha = ix[f"beta_{i}_{t}"], ix[f"alpha_{i}_{t}"]
            b.con(f"bb1_{i}_{t}", [(beta, 1.0)] + neg_le, "<=", 0.0)
            b.con(f"bb2_{i}_{t}", [(beta, 1.0)] + neg_le + [(alpha, -B)], ">=", -B)
            b.con(f"bb3_{i}_{t}", [(beta, 1.0), (alpha, -B)], "<=", 0.0)


def build_s2oct(dataset: Dataset, topology: TreeTopology, params: ModelParams) -> MilpModel:
    """Semi-supervised tree MILP: labeled leaf errors plus a soft cardinality target."""
    _check_build(dataset, topology, params)
    if params.lam > dataset.m:
        raise BuildError(f"lambda={params.lam} exceeds the number of unlabeled points m={dataset.m}")
    n, m, D = dataset.n, dataset.m, topology.depth
    M = params.big_m
    b = _Builder()
    margin, margins = _tree_block(b, dataset, topology, params)
    xi = b.var("xi")
    for i, c in enumerate(dataset.labels, start=1):
        for t in topology.leaves_of(c):
            b.var(f"alpha_{i}_{t}", BINARY, 0.0, 1.0)
    unl = range(n + 1, n + m + 1)
    for i in unl:
        for bn in topology.branch_nodes:
            b.var(f"z_{i}_{bn}", BINARY, 0.0, 1.0)
    for i in unl:
        for t in topology.leaves_a:
            b.var(f"delta_{i}_{t}", BINARY, 0.0, 1.0)

    _labeled_constraints(b, dataset, topology, params, margin)
    ix = b.index
    for i, x in zip(unl, dataset.unlabeled):
        for bn in topology.branch_nodes:
            mt = margin(bn, x)
            margins.append((f"m_{bn}_{i}", tuple(mt)))
            z = ix[f"z_{i}_{bn}"]
            b.con(f"bigm1_{bn}_{i}", mt + [(z, -M)], "<=", -1.0)
            b.con(f"bigm2_{bn}_{i}", mt + [(z, -M)], ">=", 1.0 - M)
    for i in unl:
        for t in topology.leaves_a:
            d = ix[f"delta_{i}_{t}"]
            right, left = sorted(topology.right_path[t]), sorted(topology.left_path[t])
            for bn in right:
                b.con(f"d1_{i}_{t}_{bn}", [(d, 1.0), (ix[f"z_{i}_{bn}"], -1.0)], "<=", 0.0)
            for bn in left:
                b.con(f"d2_{i}_{t}_{bn}", [(d, 1.0), (ix[f"z_{i}_{bn}"], 1.0)], "<=", 1.0)
            terms = [(d, 1.0)] + [(ix[f"z_{i}_{bn}"], -1.0) for bn in right]
            terms += [(ix[f"z_{i}_{bn}"], 1.0) for bn in left]
            b.con(f"dsum_{i}_{t}", terms, ">=", len(left) - (D - 1))
    deltas = [(ix[f"delta_{i}_{t}"], 1.0) for i in unl for t in topology.leaves_a]
    b.con("card_lo", deltas + [(xi, 1.0)], ">=", params.lam)
    b.con("card_hi", deltas + [(xi, -1.0)], "<=", params.lam)

    objective = [(ix[v.name], 1.0) for v in b.variables if v.name.startswith("beta_")]
    objective.append((xi, params.C))
    return MilpModel(
        name="s2oct",
        variables=tuple(b.variables),
        constraints=tuple(b.constraints),
        objective=tuple(objective),
        margins=tuple(margins),
        meta=dict(kind="s2oct", depth=D, p=dataset.p, n=n, m=m, lam=params.lam),
    )


def build_labeled_only(dataset: Dataset, topology: TreeTopology, params: ModelParams) -> MilpModel:
    """Baseline tree fitted to the labeled points only; ``params.lam`` is ignored."""
    _check_build(dataset, topology, params)
    b = _Builder()
    margin, margins = _tree_block(b, dataset, topology, params)
    for i, c in enumerate(dataset.labels, start=1):
        for t in topology.leaves_of(c):
            b.var(f"alpha_{i}_{t}", BINARY, 0.0, 1.0)
    _labeled_constraints(b, dataset, topology, params, margin)
    objective = [(b.index[v.name], 1.0) for v in b.variables if v.name.startswith("beta_")]
    return MilpModel(
        name="labeled_only",
        variables=tuple(b.variables),
        constraints=tuple(b.constraints),
        objective=tuple(objective),
        margins=tuple(margins),
        meta=dict(kind="labeled_only", depth=topology.depth, p=dataset.p, n=dataset.n, m=0, lam=None),
    )


# ---------------------------------------------------------------------------
# solutions


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    TIME_LIMIT = "TimeLimit"
    ERROR = "Error"
    UNKNOWN = "Unknown"

    @property
    def has_solution(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.FEASIBLE)


@dataclass
class SolveReport:
    status: SolveStatus
    runtime_seconds: float = 0.0
    objective: float = math.nan
    best_bound: float = math.nan
    tree: Optional[TreeParams] = None
    xi: float = math.nan
    binaries: dict = field(default_factory=dict)
    values: Optional[np.ndarray] = field(default=None, repr=False)
    solver_objective: float = math.nan
    max_violation: float = math.nan
    polished: bool = False
    notes: list = field(default_factory=list)
    diagnostics: str = ""

    def value(self, model: MilpModel, name: str) -> float:
        return float(self.values[model.var(name)])


def extract_solution(model: MilpModel, values, tol: float = INTEGRALITY_TOL) -> SolveReport:
    """Read tree parameters, slack and binary summary from a full value vector."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(model.variables),):
        raise SolutionIntegrityError(
            f"value vector has {values.size} entries, model has {len(model.variables)} variables"
        )
    for v, x in zip(model.variables, values):
        if v.kind == BINARY and min(abs(x), abs(x - 1.0)) > tol:
            raise SolutionIntegrityError(f"binary {v.name} = {x!r} is not integral within {tol}")
    D, p = model.meta["depth"], model.meta["p"]
    nb = 2**D - 1
    omega = np.array([[values[model.var(f"w_{bn}_{j}")] for j in range(1, p + 1)] for bn in range(1, nb + 1)])
    gamma = np.array([values[model.var(f"g_{bn}")] for bn in range(1, nb + 1)])
    xi = float(values[model.var("xi")]) if model.has("xi") else 0.0
    summary = {}
    for prefix in ("alpha", "z", "delta"):
        cols = [model.var(nm) for nm in model.names(prefix)]
        summary[f"{prefix}_count"] = len(cols)
        summary[f"{prefix}_ones"] = int(np.rint(values[cols]).sum()) if cols else 0
    return SolveReport(
        status=SolveStatus.UNKNOWN,
        objective=model.objective_value(values),
        tree=TreeParams(omega, gamma),
        xi=xi,
        binaries=summary,
        values=values,
        max_violation=model.max_violation(values),
    )


def labeled_beta_sums(model: MilpModel, values, dataset: Dataset) -> list[float]:
    """Sum of beta over each labeled point's class leaves."""
    values = np.asarray(values, dtype=float)
    out = []
    for i in range(1, dataset.n + 1):
        cols = [model.var(nm) for nm in model.names("beta") if nm.split("_")[1] == str(i)]
        out.append(float(values[cols].sum()))
    return out
