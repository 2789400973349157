import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tree_ricci.curvature import (
    RECIPROCAL,
    Metric,
    MetricError,
    NotEndpointError,
    Power,
    kappa_all,
    kappa_derivative,
    kappa_directional,
    kappa_edge,
    kappa_general,
    kappa_values,
    kappa_weight_sum,
    weighted_degree,
    weighted_degrees,
)
from tree_ricci.tree_model import parse_tree, random_tree

import oracles

trees = st.builds(
    lambda n, seed: random_tree(np.random.default_rng(seed), n),
    st.integers(2, 12),
    st.integers(0, 2**32 - 1),
)


# frozen values: unit-weight simple tree, worked by hand from D_u = 3, D_v = 2
def test_simple_tree_values(simple):
    cv = kappa_all(simple)
    expected = {"u-v": -1 / 3, "u-x": 2 / 3, "u-y": 2 / 3, "v-z": 1.0}
    for i, k in enumerate(cv.kappa):
        assert k == pytest.approx(expected[simple.edge_name(i)], abs=1e-15)
    assert cv.total == pytest.approx(2.0, abs=1e-15)
    assert list(cv.weighted_degree) == [3.0, 2.0, 1.0, 1.0, 1.0]


def test_simple_tree_nonunit_uv(simple):
    # w_uv = 2: D_u = 2.5, D_v = 1.5, kappa_uv = -1/(2 * 2.5) + 0
    w = simple.with_weights([2.0, 1, 1, 1]).initial_weights
    assert kappa_edge(simple, w, ("u", "v")) == pytest.approx(-0.2, abs=1e-15)
    assert kappa_edge(simple, w, ("v", "z")) == pytest.approx(1.0, abs=1e-15)


def test_k2_and_path():
    assert kappa_edge(parse_tree("a b 3.5\n"), None, 0) == 2.0
    path = parse_tree("a b 1\nb c 2\nc d 3\nd e 4\n")
    k = kappa_all(path).kappa
    assert k[1] == 0.0 and k[2] == 0.0
    assert k[0] == pytest.approx(1.0) and k[3] == pytest.approx(1.0)


def test_directional_parts(simple):
    assert kappa_directional(simple, None, ("u", "v"), "u") == pytest.approx(-1 / 3)
    assert kappa_directional(simple, None, ("u", "v"), "v") == 0.0
    with pytest.raises(NotEndpointError):
        kappa_directional(simple, None, ("u", "v"), "x")


def test_weighted_degree(simple):
    assert weighted_degree(simple, [2, 1, 1, 1], "u") == pytest.approx(2.5)


@pytest.mark.parametrize("bad", [[1, 1, 1], [1, 0, 1, 1], [1, -1, 1, 1], [1, np.inf, 1, 1]])
def test_bad_metric(simple, bad):
    with pytest.raises(MetricError):
        kappa_all(simple, bad)


def test_metric_type():
    m = Metric([0.25, 0.75], normalized=True)
    assert np.asarray(m).sum() == 1.0
    with pytest.raises(MetricError):
        Metric([0.5, 0.75], normalized=True)


def test_power_validation():
    with pytest.raises(ValueError):
        Power(0.0, -1.0)
    with pytest.raises(ValueError):
        Power(1.0, 0.0)
    assert RECIPROCAL.is_reciprocal and not Power(2.0, -1.0).is_reciprocal


@settings(max_examples=300, deadline=None)
@given(trees)
def test_gauss_bonnet(tree):
    assert abs(kappa_all(tree).total - 2.0) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(trees)
def test_matches_independent_closed_form(tree):
    ref = oracles.dict_curvature(oracles.graph_of(tree))
    k = kappa_all(tree).kappa
    for i, e in enumerate(tree.edges):
        assert k[i] == pytest.approx(ref[frozenset(e)], rel=1e-13, abs=1e-13)
    assert np.allclose(kappa_values(tree, tree.initial_weights), k, rtol=1e-13, atol=1e-13)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_weight_sum_identity(tree):
    cv = kappa_all(tree)
    direct = math.fsum(cv.kappa * tree.initial_weights)
    assert kappa_weight_sum(tree) == pytest.approx(direct, rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_curvature_bounds(tree):
    if tree.n_edges == 1:
        return  # K_2 has kappa = 2
    for i, (u, v) in enumerate(tree.edges):
        k = kappa_all(tree).kappa[i]
        assert 4 - tree.degree(u) - tree.degree(v) - 1e-12 <= k <= 1 + 1e-12


@settings(max_examples=100, deadline=None)
@given(trees)
def test_scale_invariance(tree):
    # w_e D_u is unchanged by a global rescaling
    w = np.array(tree.initial_weights)
    assert np.allclose(kappa_all(tree, w).kappa, kappa_all(tree, 7.3 * w).kappa, rtol=1e-12, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(trees)
def test_general_reduces_to_closed_form(tree):
    k = kappa_all(tree).kappa
    for i in range(tree.n_edges):
        assert kappa_general(tree, None, i, RECIPROCAL) == pytest.approx(k[i], rel=1e-12, abs=1e-12)
        # any positive multiple of 1/x gives the same curvature
        assert kappa_general(tree, None, i, Power(3.0, -1.0)) == pytest.approx(k[i], rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("gamma", [Power(1.0, -2.0), Power(2.0, -0.5), Power(1.0, -3.0)])
def test_general_power_against_transport_lp(rng, gamma):
    for _ in range(15):
        t = random_tree(rng, int(rng.integers(2, 8)), low=0.5, high=2.0)
        g = oracles.graph_of(t)
        for i, (u, v) in enumerate(t.edges):
            ref = oracles.lp_curvature(g, u, v, 0.9, gamma)
            assert kappa_general(t, None, i, gamma) == pytest.approx(ref, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(trees)
def test_kappa_derivative_matches_finite_difference(tree):
    w = np.array(tree.initial_weights)
    h = 1e-6
    rhs = -kappa_values(tree, w) * w
    fd = (kappa_values(tree, w + h * rhs) - kappa_values(tree, w - h * rhs)) / (2 * h)
    scale = max(1.0, np.max(np.abs(fd)))
    assert np.allclose(kappa_derivative(tree, w), fd, atol=1e-5 * scale, rtol=1e-5)


def test_weighted_degrees_power(simple):
    D = weighted_degrees(simple, [1, 2, 4, 1], Power(1.0, -2.0))
    assert D[0] == pytest.approx(1 + 1 / 4 + 1 / 16)
