"""Tree topology, hyperplane routing, and branch/leaf errors.

Nodes are numbered heap-style: branch nodes ``1 .. 2**D - 1`` and leaves
``2**D .. 2**(D+1) - 1``. The children of node ``b`` are ``2b`` (left) and
``2b + 1`` (right). Even leaves predict class A, odd leaves class B.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError

MAX_DEPTH = 10


class Label(str, enum.Enum):
    A = "A"
    B = "B"

    @classmethod
    def parse(cls, value) -> "Label":
        if isinstance(value, Label):
            return value
        return cls(str(value).strip().upper())


@dataclass(frozen=True)
class Dataset:
    """Labeled points followed by unlabeled points, all in ``R^p``.

    ``labeled`` has shape ``(n, p)`` and ``unlabeled`` shape ``(m, p)``;
    ``labels`` holds the class of each labeled row.
    """

    labeled: np.ndarray
    labels: tuple[Label, ...]
    unlabeled: np.ndarray

    def __post_init__(self):
        lab = np.atleast_2d(np.asarray(self.labeled, dtype=float))
        unl = np.asarray(self.unlabeled, dtype=float)
        if unl.size == 0:
            unl = unl.reshape(0, lab.shape[1])
        unl = np.atleast_2d(unl)
        if lab.shape[0] < 1:
            raise ParameterError("a dataset needs at least one labeled point")
        if lab.shape[1] < 1 or unl.shape[1] != lab.shape[1]:
            raise ParameterError(
                f"dimension mismatch: labeled p={lab.shape[1]}, unlabeled p={unl.shape[1]}"
            )
        labels = tuple(Label.parse(c) for c in self.labels)
        if len(labels) != lab.shape[0]:
            raise ParameterError("one label per labeled point is required")
        lab.setflags(write=False)
        unl.setflags(write=False)
        object.__setattr__(self, "labeled", lab)
        object.__setattr__(self, "unlabeled", unl)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labeled.shape[0]

    @property
    def m(self) -> int:
        return self.unlabeled.shape[0]

    @property
    def N(self) -> int:
        return self.n + self.m

    @property
    def p(self) -> int:
        return self.labeled.shape[1]

    @property
    def points(self) -> np.ndarray:
        """All points, labeled first, as an ``(N, p)`` array."""
        return np.vstack([self.labeled, self.unlabeled])


@dataclass(frozen=True)
class TreeTopology:
    depth: int
    left_path: dict[int, frozenset[int]] = field(repr=False)
    right_path: dict[int, frozenset[int]] = field(repr=False)

    @property
    def branch_nodes(self) -> range:
        return range(1, 2**self.depth)

    @property
    def leaf_nodes(self) -> range:
        return range(2**self.depth, 2 ** (self.depth + 1))

    @property
    def leaves_a(self) -> tuple[int, ...]:
        return tuple(t for t in self.leaf_nodes if t % 2 == 0)

    @property
    def leaves_b(self) -> tuple[int, ...]:
        return tuple(t for t in self.leaf_nodes if t % 2 == 1)

    def leaves_of(self, label: Label) -> tuple[int, ...]:
        return self.leaves_a if Label.parse(label) is Label.A else self.leaves_b

    def leaf_label(self, t: int) -> Label:
        return Label.A if t % 2 == 0 else Label.B


def build_topology(depth: int) -> TreeTopology:
    if not isinstance(depth, (int, np.integer)) or not 1 <= depth <= MAX_DEPTH:
        raise ParameterError(f"depth must be an integer in [1, {MAX_DEPTH}], got {depth!r}")
    depth = int(depth)
    left, right = {}, {}
    for t in range(2**depth, 2 ** (depth + 1)):
        lp, rp = set(), set()
        node = t
        while node > 1:
            parent = node // 2
            (lp if node % 2 == 0 else rp).add(parent)
            node = parent
        left[t] = frozenset(lp)
        right[t] = frozenset(rp)
    return TreeTopology(depth, left, right)


@dataclass(frozen=True)
class TreeParams:
    """Hyperplane ``(omega[b-1], gamma[b-1])`` for every branch node ``b``."""

    omega: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        omega = np.atleast_2d(np.asarray(self.omega, dtype=float))
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if omega.shape[0] != gamma.shape[0]:
            raise ParameterError("omega needs one row per gamma entry")
        nb = omega.shape[0]
        if nb < 1 or (nb + 1) & nb:
            raise ParameterError(f"number of branch nodes must be 2**D - 1, got {nb}")
        omega.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "gamma", gamma)

    @property
    def depth(self) -> int:
        return (self.omega.shape[0] + 1).bit_length() - 1

    def margin(self, x, b: int) -> float:
        """Signed value ``omega_b . x - gamma_b`` at branch node ``b``."""
        return float(self.omega[b - 1] @ np.asarray(x, dtype=float) - self.gamma[b - 1])


def route_point(topology: TreeTopology, params: TreeParams, x) -> int:
    x = np.asarray(x, dtype=float)
    b = 1
    n_branch = 2**topology.depth
    while b < n_branch:
        # boundary value 0 goes left
        b = 2 * b if params.margin(x, b) <= 0.0 else 2 * b + 1
    return b


def classify(topology: TreeTopology, params: TreeParams, x) -> Label:
    return topology.leaf_label(route_point(topology, params, x))


def predict(topology: TreeTopology, params: TreeParams, X) -> list[Label]:
    return [classify(topology, params, x) for x in np.atleast_2d(X)]


def branch_errors(params: TreeParams, x, b: int) -> tuple[float, float]:
    """Return ``(yR, yL)``: hinge violations of going right / left at ``b``."""
    v = params.margin(x, b)
    return max(0.0, -v + 1.0), max(0.0, v + 1.0)


def leaf_error(topology: TreeTopology, params: TreeParams, x, t: int) -> float:
    if t not in topology.leaf_nodes:
        raise ParameterError(f"{t} is not a leaf of a depth-{topology.depth} tree")
    total = 0.0
    for b in topology.right_path[t]:
        total += branch_errors(params, x, b)[0]
    for b in topology.left_path[t]:
        total += branch_errors(params, x, b)[1]
    return total


def min_leaf_error(topology: TreeTopology, params: TreeParams, x, label: Label) -> float:
    return min(leaf_error(topology, params, x, t) for t in topology.leaves_of(label))


def count_class_a(topology: TreeTopology, params: TreeParams, X: Sequence) -> int:
    return sum(classify(topology, params, x) is Label.A for x in np.atleast_2d(X))
