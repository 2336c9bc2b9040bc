import math

import numpy as np
import pytest

from s2oct.core import Dataset, build_topology
from s2oct.errors import BuildError, ParameterError, SolutionIntegrityError
from s2oct.model import (
    ModelParams,
    build_labeled_only,
    build_s2oct,
    compute_big_m,
    compute_bound_b,
    compute_eta,
    default_depth,
    default_s,
    extract_solution,
)


@pytest.mark.parametrize(
    "points, eta",
    [([(0, 0), (3, 4)], 5.0), ([(0, 0), (1, 0), (0, 1)], math.sqrt(2)), ([(2, 2), (2, 2)], 0.0)],
)
def test_compute_eta(points, eta):
    assert compute_eta(points) == pytest.approx(eta, abs=1e-12)


def test_compute_eta_matches_pairwise_loop():
    X = np.random.default_rng(5).normal(size=(37, 3)) * 10
    brute = max(np.linalg.norm(a - b) for a in X for b in X)
    assert compute_eta(X, chunk=8) == pytest.approx(brute, rel=1e-12)


def test_compute_eta_needs_two_points():
    with pytest.raises(ParameterError):
        compute_eta([(1.0, 2.0)])


def test_big_m_and_bound():
    assert compute_big_m(5, 10, 4) == 101
    assert compute_bound_b(2, 5, 10, 4) == 202
    assert compute_big_m(0, 10, 4) == 1 and compute_bound_b(3, 0, 10, 4) == 3


def test_default_s_and_depth():
    assert default_s(500, 100 / math.sqrt(4), 4) == 10
    assert default_s(700, 10 / math.sqrt(4), 4) == pytest.approx(49.9)
    assert default_s(2000, 1000, 1) == 40
    with pytest.raises(ParameterError):
        default_s(10, 0.0, 2)
    assert default_depth(999) == 2 and default_depth(1000) == 3


def dataset(n, m, p=2, seed=0):
    rng = np.random.default_rng(seed)
    labels = ["A" if k % 2 == 0 else "B" for k in range(n)]
    return Dataset(rng.random((n, p)), labels, rng.random((m, p)))


def build(ds, depth, lam=0, **kw):
    t = build_topology(depth)
    return build_s2oct(ds, t, ModelParams.for_dataset(ds, depth=depth, lam=lam, **kw))


def test_variable_counts_reference():
    model = build(dataset(4, 6), 2, lam=3)
    assert (model.n_continuous, model.n_binary) == (42, 38)
    counts = {pre: len(model.names(pre)) for pre in ("w", "g", "yR", "yL", "beta", "xi", "alpha", "z", "delta")}
    assert counts == dict(w=6, g=3, yR=12, yL=12, beta=8, xi=1, alpha=8, z=18, delta=12)


def test_baseline_counts_and_lambda_ignored():
    ds = dataset(4, 6)
    t = build_topology(2)
    base = [build_labeled_only(ds, t, ModelParams.for_dataset(ds, depth=2, lam=lam)) for lam in (0, 5)]
    assert (base[0].n_continuous, base[0].n_binary) == (41, 8)
    assert base[0] == base[1]
    assert not base[0].names("z") and not base[0].has("xi")


def test_empty_unlabeled_model():
    ds = Dataset([[0.0, 0.0], [1.0, 1.0]], ["A", "B"], [])
    model = build(ds, 1)
    assert not model.names("z") and not model.names("delta")
    xi = model.var("xi")
    card = {c.name: c for c in model.constraints_with_prefix("card")}
    # both cardinality rows collapse to xi >= 0
    assert card["card_lo"].terms == ((xi, 1.0),) and card["card_lo"].sense == ">=" and card["card_lo"].rhs == 0
    assert card["card_hi"].terms == ((xi, -1.0),) and card["card_hi"].sense == "<=" and card["card_hi"].rhs == 0


@pytest.mark.parametrize("depth, m", [(1, 3), (2, 6), (3, 2)])
def test_bigm_row_count(depth, m):
    model = build(dataset(3, m), depth)
    assert len(model.constraints_with_prefix("bigm1")) == m * (2**depth - 1)


def test_build_rejects_lambda_above_m():
    with pytest.raises(BuildError):
        build(dataset(2, 2), 1, lam=3)


def test_build_rejects_zero_eta():
    ds = Dataset([[1.0, 1.0]], ["A"], [[1.0, 1.0]])
    with pytest.raises(ParameterError):
        build(ds, 1)


def test_names_and_bounds():
    ds = dataset(2, 1)
    params = ModelParams.for_dataset(ds, depth=1, s=3.0)
    model = build_s2oct(ds, build_topology(1), params)
    v = model.variables[model.var("w_1_2")]
    assert (v.lower, v.upper) == (-3.0, 3.0)
    g = model.variables[model.var("g_1")]
    assert g.lower == -math.inf and g.upper == math.inf
    assert model.variables[model.var("beta_1_2")].upper == params.bound_b
    assert {n for n in model.names("alpha")} == {"alpha_1_2", "alpha_2_3"}


def test_clamp_gamma_bounds_gamma():
    ds = dataset(2, 1)
    model = build(ds, 1, clamp_gamma=True)
    g = model.variables[model.var("g_1")]
    assert math.isfinite(g.lower) and g.lower == -g.upper


def test_every_constraint_references_declared_columns():
    model = build(dataset(3, 3), 2, lam=1)
    nv = len(model.variables)
    assert all(0 <= j < nv for c in model.constraints for j, _ in c.terms)
    assert len({v.name for v in model.variables}) == nv


def test_build_is_deterministic():
    ds = dataset(3, 4, seed=9)
    assert build(ds, 2, lam=2) == build(ds, 2, lam=2)


def test_extract_rejects_fractional_binary():
    model = build(dataset(2, 1), 1)
    values = np.zeros(len(model.variables))
    values[model.var("alpha_1_2")] = 0.5
    with pytest.raises(SolutionIntegrityError):
        extract_solution(model, values)


def test_extract_reads_tree():
    model = build(dataset(2, 1), 1)
    values = np.zeros(len(model.variables))
    values[model.var("w_1_1")] = 2.0
    values[model.var("g_1")] = -1.0
    rep = extract_solution(model, values)
    assert rep.tree.omega.tolist() == [[2.0, 0.0]] and rep.tree.gamma.tolist() == [-1.0]
