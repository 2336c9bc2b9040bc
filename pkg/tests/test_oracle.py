import math

import numpy as np
import pytest

from s2oct.core import Dataset, build_topology, leaf_error
from s2oct.errors import SizeError
from s2oct.experiment import random_tiny_instance
from s2oct.model import ModelParams, build_s2oct
from s2oct.oracle import assignment_count, enumerate_optimum, leaf_from_decisions
from s2oct.solve import solve

T1 = build_topology(1)


def params(ds, **kw):
    return ModelParams.for_dataset(ds, depth=1, **kw)


def test_separable_no_unlabeled(exact_config):
    ds = Dataset([[0.0, 0.0], [1.0, 0.0]], ["A", "B"], [])
    ref = enumerate_optimum(ds, T1, params(ds))
    assert ref.objective == pytest.approx(0, abs=1e-9)
    rep = solve(build_s2oct(ds, T1, params(ds)), exact_config)
    assert rep.objective == pytest.approx(ref.objective, abs=1e-5)


def test_coincident_unlabeled_point():
    ds = Dataset([[0.0, 0.0]], ["A"], [[0.0, 0.0]])
    ref = enumerate_optimum(ds, T1, params(ds, lam=1, eta=1.0))
    assert ref.objective == pytest.approx(0, abs=1e-9) and ref.xi == 0


def test_cardinality_tradeoff(exact_config):
    # unlabeled points lie beyond the class-A point, so a zero-error split sends them to A
    ds = Dataset([[0.0, 0.0], [10.0, 0.0]], ["A", "B"], [[-5.0, 0.0], [-6.0, 0.0]])
    cheap = enumerate_optimum(ds, T1, params(ds, lam=0, C=0.1))
    assert cheap.xi == 2 and cheap.objective == pytest.approx(0.2, abs=1e-7)
    dear = enumerate_optimum(ds, T1, params(ds, lam=0, C=5.0))
    assert 0 < dear.objective < 10.0
    rep = solve(build_s2oct(ds, T1, params(ds, lam=0, C=5.0)), exact_config)
    assert rep.objective == pytest.approx(dear.objective, abs=1e-5)


def test_certificate_is_consistent():
    ds = Dataset([[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]], ["A", "B", "A"], [[0.5, 0.5]])
    ref = enumerate_optimum(ds, T1, params(ds, lam=1))
    tree = ref.tree
    labeled = sum(leaf_error(T1, tree, x, t) for x, t in zip(ds.labeled, ref.alpha))
    assert ref.objective == pytest.approx(labeled + ref.xi, abs=1e-7)
    for x, zi in zip(ds.unlabeled, ref.z):
        assert (tree.margin(x, 1) >= 1 - 1e-7) == bool(zi[0])


def test_guard():
    rng = np.random.default_rng(0)
    ds = Dataset(rng.random((4, 2)), ["A"] * 4, rng.random((6, 2)))
    t3 = build_topology(3)
    assert assignment_count(ds, t3) == 4**4 * 2 ** (6 * 7)
    with pytest.raises(SizeError):
        enumerate_optimum(ds, t3, ModelParams.for_dataset(ds, depth=3))


def test_leaf_from_decisions_depth2():
    t2 = build_topology(2)
    assert [leaf_from_decisions(t2, z) for z in [(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 0, 1)]] == [4, 5, 6, 7]


def test_objective_nonincreasing_in_s():
    rng = np.random.default_rng(1)
    for _ in range(15):
        ds, lam = random_tiny_instance(rng)
        # smallest s for which the routing margins fit inside M
        base = 2.0 / (params(ds).eta * math.sqrt(ds.p))
        prev = math.inf
        for factor in (1, 1.5, 3, 10):
            obj = enumerate_optimum(ds, T1, params(ds, lam=lam, s=base * factor)).objective
            assert obj <= prev + 1e-9
            prev = obj


def test_small_c_approaches_labeled_only():
    rng = np.random.default_rng(2)
    C = 1e-6
    for _ in range(15):
        ds, lam = random_tiny_instance(rng)
        full = enumerate_optimum(ds, T1, params(ds, lam=lam, C=C)).objective
        only = Dataset(ds.labeled, ds.labels, [])
        base = enumerate_optimum(only, T1, params(ds, lam=0, C=C)).objective
        assert abs(full - base) <= C * ds.m + 1e-7
