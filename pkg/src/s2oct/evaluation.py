"""Confusion counts, classification metrics, paired differences, and ECDFs.

Class A is the positive class throughout.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import Label

METRIC_NAMES = ("AC", "MCC", "PR", "RE")


@dataclass(frozen=True)
class ConfusionCounts:
    TP: int = 0
    TN: int = 0
    FP: int = 0
    FN: int = 0

    @property
    def total(self) -> int:
        return self.TP + self.TN + self.FP + self.FN


def confusion(predictions: Sequence, truth: Sequence) -> ConfusionCounts:
    if len(predictions) != len(truth):
        raise ValueError(f"length mismatch: {len(predictions)} predictions, {len(truth)} labels")
    tp = tn = fp = fn = 0
    for p, t in zip(predictions, truth):
        p_a = Label.parse(p) is Label.A
        t_a = Label.parse(t) is Label.A
        if p_a and t_a:
            tp += 1
        elif p_a:
            fp += 1
        elif t_a:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, tn, fp, fn)


def accuracy(c: ConfusionCounts) -> float:
    return (c.TP + c.TN) / c.total if c.total else 0.0


def mcc(c: ConfusionCounts) -> float:
    """Matthews correlation; 0 when any marginal of the table is empty."""
    factors = (c.TP + c.FP, c.TP + c.FN, c.TN + c.FP, c.TN + c.FN)
    if 0 in factors:
        return 0.0
    den = math.sqrt(math.prod(float(f) for f in factors))
    return (c.TP * c.TN - c.FP * c.FN) / den


def precision(c: ConfusionCounts) -> float:
    return c.TP / (c.TP + c.FP) if c.TP + c.FP else 0.0


def recall(c: ConfusionCounts) -> float:
    return c.TP / (c.TP + c.FN) if c.TP + c.FN else 0.0


@dataclass(frozen=True)
class Metrics:
    AC: float
    MCC: float
    PR: float
    RE: float
    PR_undefined: bool = False
    RE_undefined: bool = False

    @classmethod
    def from_counts(cls, c: ConfusionCounts) -> "Metrics":
        return cls(
            AC=accuracy(c),
            MCC=mcc(c),
            PR=precision(c),
            RE=recall(c),
            PR_undefined=c.TP + c.FP == 0,
            RE_undefined=c.TP + c.FN == 0,
        )

    @classmethod
    def of(cls, predictions, truth) -> "Metrics":
        return cls.from_counts(confusion(predictions, truth))

    def as_dict(self) -> dict:
        return asdict(self)


def diff_metrics(a: Metrics, b: Metrics) -> dict[str, float]:
    """Per-metric difference ``a - b`` (semi-supervised minus baseline)."""
    return {k: getattr(a, k) - getattr(b, k) for k in METRIC_NAMES}


class ECDF:
    """Fraction of problems solved within a time budget.

    Runs slower than ``limit`` (or missing, ``None``/``nan``) count as unsolved.
    """

    def __init__(self, times: Iterable[Optional[float]], limit: float):
        times = [math.inf if t is None or (isinstance(t, float) and math.isnan(t)) else float(t) for t in times]
        self.limit = float(limit)
        self.total = len(times)
        self.solved = np.sort(np.array([t for t in times if t <= self.limit], dtype=float))

    def __call__(self, sigma):
        if self.total == 0:
            return np.zeros_like(np.asarray(sigma, dtype=float))
        counts = np.searchsorted(self.solved, np.asarray(sigma, dtype=float), side="right")
        out = counts / self.total
        return float(out) if np.ndim(out) == 0 else out

    def steps(self) -> tuple[np.ndarray, np.ndarray]:
        """Sample points ``(sigma, gamma(sigma))`` at every solved run time."""
        return self.solved.copy(), np.arange(1, self.solved.size + 1) / max(self.total, 1)


def ecdf(times, limit: float) -> ECDF:
    return ECDF(times, limit)
