import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from s2oct.core import (
    Dataset,
    Label,
    TreeParams,
    branch_errors,
    build_topology,
    classify,
    leaf_error,
    route_point,
)
from s2oct.errors import ParameterError


def test_topology_depth2_paths():
    t = build_topology(2)
    assert t.left_path[4] == {1, 2} and t.right_path[4] == set()
    assert t.left_path[5] == {1} and t.right_path[5] == {2}
    assert t.left_path[6] == {3} and t.right_path[6] == {1}
    assert t.left_path[7] == set() and t.right_path[7] == {1, 3}
    assert t.leaves_a == (4, 6) and t.leaves_b == (5, 7)


def test_topology_depth1():
    t = build_topology(1)
    assert list(t.branch_nodes) == [1]
    assert t.leaves_a == (2,) and t.leaves_b == (3,)


@pytest.mark.parametrize("depth", [0, 11, -1, 2.5])
def test_topology_rejects_bad_depth(depth):
    with pytest.raises(ParameterError):
        build_topology(depth)


@pytest.mark.parametrize("depth", range(1, 7))
def test_topology_invariants(depth):
    t = build_topology(depth)
    assert len(t.branch_nodes) == 2**depth - 1
    assert set(t.leaves_a) | set(t.leaves_b) == set(t.leaf_nodes)
    for leaf in t.leaf_nodes:
        left, right = t.left_path[leaf], t.right_path[leaf]
        assert len(left) + len(right) == depth
        assert not left & right
        assert (left | right) <= set(t.branch_nodes)


D1 = TreeParams([[1.0, 0.0]], [0.0])


@pytest.mark.parametrize(
    "x, leaf, label",
    [((2.0, 0.0), 3, Label.B), ((-1.0, 0.0), 2, Label.A), ((0.0, 5.0), 2, Label.A)],
)
def test_route_and_classify_depth1(x, leaf, label):
    t = build_topology(1)
    assert route_point(t, D1, x) == leaf
    assert classify(t, D1, x) is label


def test_route_depth2_right_then_left():
    t = build_topology(2)
    params = TreeParams([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]], [0.0, 0.0, 0.0])
    assert route_point(t, params, (1.0, -1.0)) == 6
    assert classify(t, params, (1.0, -1.0)) is Label.A


@pytest.mark.parametrize(
    "omega, x, expected",
    [((1.0, 0.0), (2.0, 0.0), (0.0, 3.0)), ((1.0, 0.0), (-2.0, 0.0), (3.0, 0.0)), ((0.0, 0.0), (5.0, 5.0), (1.0, 1.0))],
)
def test_branch_errors(omega, x, expected):
    assert branch_errors(TreeParams([omega], [0.0]), x, 1) == expected


def test_leaf_error_examples():
    t1 = build_topology(1)
    assert leaf_error(t1, D1, (2.0, 0.0), 2) == 3.0
    assert leaf_error(t1, D1, (2.0, 0.0), 3) == 0.0
    t2 = build_topology(2)
    params = TreeParams([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]], [0.0, 0.0, 0.0])
    assert leaf_error(t2, params, (2.0, 0.0), 4) == 6.0
    with pytest.raises(ParameterError):
        leaf_error(t2, params, (2.0, 0.0), 3)


def test_dataset_validation():
    with pytest.raises(ParameterError):
        Dataset(np.zeros((2, 2)), ["A", "B"], np.zeros((1, 3)))
    with pytest.raises(ParameterError):
        Dataset(np.zeros((2, 2)), ["A"], np.zeros((0, 2)))
    ds = Dataset([[0.0, 1.0]], ["a"], [])
    assert (ds.n, ds.m, ds.N, ds.p) == (1, 0, 1, 2)


coords = st.floats(-50, 50, allow_nan=False)


@st.composite
def tree_and_point(draw):
    depth = draw(st.integers(1, 3))
    nb = 2**depth - 1
    omega = np.array(draw(st.lists(st.lists(coords, min_size=2, max_size=2), min_size=nb, max_size=nb)))
    gamma = np.array(draw(st.lists(coords, min_size=nb, max_size=nb)))
    x = np.array(draw(st.lists(coords, min_size=2, max_size=2)))
    return build_topology(depth), TreeParams(omega, gamma), x


@settings(max_examples=200, deadline=None)
@given(tree_and_point(), st.floats(0.01, 100))
def test_classify_invariant_under_positive_rescaling(tp, scale):
    t, params, x = tp
    scaled = TreeParams(params.omega * scale, params.gamma * scale)
    # rescaling can flip an exact-zero margin only through rounding; skip near-boundary points
    if all(abs(params.margin(x, b)) > 1e-9 for b in t.branch_nodes):
        assert route_point(t, params, x) == route_point(t, scaled, x)


@settings(max_examples=200, deadline=None)
@given(tree_and_point())
def test_routed_leaf_error_bounds(tp):
    t, params, x = tp
    routed = route_point(t, params, x)
    le_routed = leaf_error(t, params, x, routed)
    assert le_routed <= t.depth + 1e-9
    for leaf in t.leaf_nodes:
        assert le_routed <= leaf_error(t, params, x, leaf) + 2 * t.depth
    if all(abs(params.margin(x, b)) >= 1 for b in t.branch_nodes):
        assert le_routed == 0.0


@settings(max_examples=200, deadline=None)
@given(tree_and_point())
def test_branch_error_complementarity(tp):
    t, params, x = tp
    for b in t.branch_nodes:
        yr, yl = branch_errors(params, x, b)
        assert yr >= 0 and yl >= 0
        if abs(params.margin(x, b)) >= 1:
            assert min(yr, yl) == 0.0
