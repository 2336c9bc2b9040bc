"""CSV ingestion, feature scaling, class collapsing, and labeling samplers."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset, Label
from .errors import DesignError, FormatError

MISSING_TOKENS = frozenset({"", "na", "nan", "?", "null", "none"})
SCALE_BOUND = 100.0


@dataclass(frozen=True)
class RawTable:
    """Complete-case feature matrix with one integer class label per row."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=float))
        y = np.asarray(self.labels).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise FormatError("features and labels differ in length")
        if np.isnan(X).any():
            raise FormatError("table contains missing feature values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def N(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class BinaryTable:
    features: np.ndarray
    labels: tuple[Label, ...]

    @property
    def N(self) -> int:
        return len(self.labels)

    def count(self, label: Label) -> int:
        return sum(c is label for c in self.labels)


def read_csv(path, header: bool = False) -> RawTable:
    """Read a comma-separated table whose last column is the class label.

    Rows with a missing value in any column are dropped.
    """
    rows, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if header:
            next(reader, None)
        width = None
        for lineno, rec in enumerate(reader, start=2 if header else 1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if width is None:
                width = len(rec)
                if width < 2:
                    raise FormatError(f"{path}: need at least one feature and a label column")
            if len(rec) != width:
                raise FormatError(f"{path}:{lineno}: expected {width} columns, got {len(rec)}")
            if any(c.strip().lower() in MISSING_TOKENS for c in rec):
                continue
            try:
                feats = [float(c) for c in rec[:-1]]
                lab = float(rec[-1])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if not lab.is_integer():
                raise FormatError(f"{path}:{lineno}: class label {rec[-1]!r} is not an integer")
            rows.append(feats)
            labels.append(int(lab))
    if not rows:
        raise FormatError(f"{path}: no complete rows")
    return RawTable(np.array(rows, dtype=float), np.array(labels, dtype=int))


def collapse_classes(table: RawTable) -> BinaryTable:
    """Map label 1 to class A and every other label to class B."""
    distinct = np.unique(table.labels)
    if distinct.size > 3:
        raise FormatError(f"expected at most 3 classes, found {distinct.size}")
    labels = tuple(Label.A if int(c) == 1 else Label.B for c in table.labels)
    return BinaryTable(table.features, labels)


@dataclass
class ScalingReport:
    shift: list[float]
    remapped: list[int] = field(default_factory=list)
    skipped_constant: list[int] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            "shift = " + ",".join(repr(v) for v in self.shift),
            "remapped = " + ",".join(str(j) for j in self.remapped),
            "skipped_constant = " + ",".join(str(j) for j in self.skipped_constant),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ScalingReport":
        kv = {}
        for line in text.splitlines():
            if "=" in line:
                k, v = line.split("=", 1)
                kv[k.strip()] = [s for s in v.strip().split(",") if s]
        return cls(
            shift=[float(s) for s in kv.get("shift", [])],
            remapped=[int(s) for s in kv.get("remapped", [])],
            skipped_constant=[int(s) for s in kv.get("skipped_constant", [])],
        )


def _features(table):
    return table.features if hasattr(table, "features") else np.asarray(table, dtype=float)


def _with_features(table, X):
    if isinstance(table, RawTable):
        return RawTable(X, table.labels)
    if isinstance(table, BinaryTable):
        return BinaryTable(X, table.labels)
    return X


def scale_midpoint(table, bound: float = SCALE_BOUND):
    """Center every coordinate on its range midpoint.

    Coordinates whose centered range still leaves ``[-bound, bound]`` are
    mapped affinely onto exactly that interval. Returns the scaled table
    (same type as the input) and a :class:`ScalingReport`.
    """
    X = np.array(_features(table), dtype=float)
    if X.shape[0] < 1:
        raise FormatError("cannot scale an empty table")
    lo, hi = X.min(axis=0), X.max(axis=0)
    mid = 0.5 * (lo + hi)
    X -= mid
    report = ScalingReport(shift=[float(v) for v in mid])
    lo_s, hi_s = lo - mid, hi - mid
    for j in range(X.shape[1]):
        if lo_s[j] < -bound or hi_s[j] > bound:
            if hi_s[j] == lo_s[j]:
                report.skipped_constant.append(j)
                continue
            X[:, j] = 2.0 * bound * (X[:, j] - lo_s[j]) / (hi_s[j] - lo_s[j]) - bound
            report.remapped.append(j)
    return _with_features(table, X), report


def scale_unit(table):
    """Map every coordinate affinely onto ``[0, 1]``; constants go to 0.5."""
    X = np.array(_features(table), dtype=float)
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    const = span == 0
    out = np.empty_like(X)
    out[:, ~const] = (X[:, ~const] - lo[~const]) / span[~const]
    out[:, const] = 0.5
    return _with_features(table, out)


class SampleKind(str, enum.Enum):
    BIASED = "biased"
    SIMPLE = "simple"


@dataclass(frozen=True)
class SampleDesign:
    kind: SampleKind = SampleKind.BIASED
    labeled_fraction: float = 0.10
    bias_probability: float = 0.85
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SampleKind(self.kind))
        if not 0.0 < self.labeled_fraction <= 1.0:
            raise DesignError(f"labeled_fraction must lie in (0, 1], got {self.labeled_fraction}")
        if not 0.0 <= self.bias_probability <= 1.0:
            raise DesignError(f"bias_probability must lie in [0, 1], got {self.bias_probability}")

    def labeled_count(self, N: int) -> int:
        # round half up
        return int(math.floor(self.labeled_fraction * N + 0.5))


@dataclass(frozen=True)
class Sample:
    dataset: Dataset
    labeled_index: np.ndarray
    unlabeled_index: np.ndarray
    unlabeled_truth: tuple[Label, ...]
    lam: int

    @property
    def truth(self) -> tuple[Label, ...]:
        """Ground truth for every point in dataset order (labeled first)."""
        return self.dataset.labels + self.unlabeled_truth


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream; the bit stream is fixed by numpy across platforms."""
    return np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))


def draw_sample(table: BinaryTable, design: SampleDesign) -> Sample:
    N = table.N
    n = design.labeled_count(N)
    if n <= 0 or n >= N:
        raise DesignError(f"design yields n={n} labeled of N={N}; need 0 < n < N")
    rng = make_rng(design.seed)
    if design.kind is SampleKind.SIMPLE:
        chosen = rng.choice(N, size=n, replace=False)
    else:
        pool_a = [i for i, c in enumerate(table.labels) if c is Label.A]
        pool_b = [i for i, c in enumerate(table.labels) if c is Label.B]
        chosen = []
        for _ in range(n):
            take_a = rng.random() < design.bias_probability
            if not pool_a:
                take_a = False
            elif not pool_b:
                take_a = True
            pool = pool_a if take_a else pool_b
            chosen.append(pool.pop(int(rng.integers(len(pool)))))
    lab_idx = np.sort(np.asarray(chosen, dtype=int))
    mask = np.ones(N, dtype=bool)
    mask[lab_idx] = False
    unl_idx = np.flatnonzero(mask)
    X = table.features
    labels = tuple(table.labels[i] for i in lab_idx)
    truth = tuple(table.labels[i] for i in unl_idx)
    ds = Dataset(X[lab_idx], labels, X[unl_idx])
    lam = sum(c is Label.A for c in truth)
    return Sample(ds, lab_idx, unl_idx, truth, lam)


def load_table(path, header: bool = False, scaling: str = "midpoint"):
    """Read, collapse, and scale a CSV. Returns ``(BinaryTable, ScalingReport | None)``."""
    table = collapse_classes(read_csv(path, header=header))
    if scaling == "midpoint":
        return scale_midpoint(table)
    if scaling == "unit":
        return scale_unit(table), None
    if scaling == "none":
        return table, None
    raise FormatError(f"unknown scaling {scaling!r}")


def write_csv(path, features, labels, header: list[str] | None = None) -> Path:
    """Write features plus an integer label column (1 for A, 2 for B)."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        for x, c in zip(np.atleast_2d(features), labels):
            lab = c if isinstance(c, (int, np.integer)) else (1 if Label.parse(c) is Label.A else 2)
            w.writerow([repr(float(v)) for v in x] + [int(lab)])
    return path
