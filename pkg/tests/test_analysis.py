import numpy as np
import pytest

from tree_ricci.analysis import (
    CurvatureVerdictKind,
    ExtrapolatedBalanceWarning,
    LimitClass,
    NotMaximalPath,
    TrajectoryTooShort,
    WeightClass,
    balance_report,
    balance_system,
    check_caterpillar_theorem,
    detect_limits,
    maximal_paths,
    predict_limits,
    prediction_text,
    verdict_text,
    verify_prop_bounds,
)
from tree_ricci.corpus import builtin_tree
from tree_ricci.flow import FlowSpec, Trajectory, Variant, integrate, normalized_from_unnormalized
from tree_ricci.tree_model import parse_tree, random_tree


@pytest.fixture(scope="module")
def runs():
    out = {}
    for name, metric in [("simple", "unit"), ("t1", "unit"), ("t2", "unit"), ("t3", "unit"), ("spider", "unit")]:
        t = builtin_tree(name, metric)
        out[name] = (t, integrate(t, None, FlowSpec(t_end=40)))
    return out


def kinds(tree, pred):
    return {tree.edge_name(p.edge): p.kind for p in pred}


def test_predict_simple(simple):
    pred = predict_limits(simple)
    k = kinds(simple, pred)
    assert k == {
        "u-v": LimitClass.INTERNAL_ZERO,
        "u-x": LimitClass.LEAF_POSITIVE,
        "u-y": LimitClass.LEAF_POSITIVE,
        "v-z": LimitClass.LEAF_IDENTITY_ONE,
    }
    assert pred[simple.edge_index(("u", "x"))].value == 0.5


def test_predict_t_trees():
    t1 = builtin_tree("t1")
    k = kinds(t1, predict_limits(t1))
    assert k["x3-x4"] is LimitClass.LEAF_ZERO
    assert k["x2-x3"] is k["x3-x5"] is LimitClass.INTERNAL_ZERO
    t2 = builtin_tree("t2")
    k = kinds(t2, predict_limits(t2))
    assert k["u4-x4"] is LimitClass.LEAF_IDENTITY_ONE
    assert {k[e] for e in ("x2-x3", "x3-x4", "x3-x5")} == {LimitClass.INTERNAL_UNKNOWN}
    assert not predict_limits(t2).caterpillar.is_caterpillar


def test_predict_negative_bounded():
    t = builtin_tree("spider")
    p = predict_limits(t)[t.edge_index(("c", "l1"))]
    assert p.kind is LimitClass.LEAF_NEGATIVE_BOUNDED
    assert p.bound == pytest.approx(-0.25) and p.sharp_bound == pytest.approx(-0.25)
    t = builtin_tree("spider2")
    p = predict_limits(t)[t.edge_index(("c", "l1"))]
    assert p.bound == pytest.approx(-0.4) and p.sharp_bound == pytest.approx(-0.2)


def test_predict_star_and_k2():
    star = builtin_tree("star4")
    assert {p.kind for p in predict_limits(star)} == {LimitClass.LEAF_STAR}
    assert predict_limits(star)[0].value == 0.5
    assert predict_limits(parse_tree("a b 1\n"))[0].kind is LimitClass.LEAF_K2


def test_predict_iff_conditions(rng):
    for _ in range(200):
        t = random_tree(rng, int(rng.integers(3, 14)))
        for p in predict_limits(t):
            u, v = t.edges[p.edge]
            if p.kind in (LimitClass.INTERNAL_ZERO, LimitClass.INTERNAL_UNKNOWN):
                assert min(t.degree(u), t.degree(v)) >= 2
                continue
            d = t.degree(p.hub)
            dl = sum(t.is_leaf(x) for x in t.adjacency[p.hub])
            assert (p.kind is LimitClass.LEAF_IDENTITY_ONE) == (d == 2)
            assert (p.kind is LimitClass.LEAF_POSITIVE) == (d >= 3 and dl == d - 1)
            assert (p.kind is LimitClass.LEAF_ZERO) == (d >= 3 and dl == d - 2)
            assert (p.kind is LimitClass.LEAF_NEGATIVE_BOUNDED) == (dl <= d - 3)


def test_predict_is_weight_free(rng):
    for _ in range(50):
        t = random_tree(rng, int(rng.integers(3, 12)))
        a = predict_limits(t)
        b = predict_limits(t.with_weights(rng.uniform(0.01, 100, t.n_edges)))
        assert a.edges == b.edges


def test_detect_simple(runs):
    t, tr = runs["simple"]
    v = detect_limits(tr)
    cls = {t.edge_name(i): c.kind for i, c in enumerate(v.weight_classes)}
    assert cls == {"u-v": WeightClass.FINITE, "u-x": WeightClass.ZERO, "u-y": WeightClass.ZERO, "v-z": WeightClass.ZERO}
    assert np.allclose(v.kappa_tail, [0, 0.5, 0.5, 1], atol=1e-6)
    assert v.e_plus == (t.edge_index(("u", "v")),)
    assert v.constant_curvature.is_constant_zero()
    # the same verdict from the normalized trajectory
    vn = detect_limits(normalized_from_unnormalized(tr))
    assert vn.e_plus == v.e_plus and vn.constant_curvature.is_constant_zero()


def test_detect_t1_zero_curvature(runs):
    t, tr = runs["t1"]
    v = detect_limits(tr)
    assert v.constant_curvature.kind is CurvatureVerdictKind.CONSTANT
    assert v.constant_curvature.is_constant_zero()
    assert set(v.e_plus) == set(t.internal_edges)


def test_detect_t2_negative_curvature(runs):
    t, tr = runs["t2"]
    v = detect_limits(tr)
    assert set(v.e_plus) == set(t.internal_edges)
    assert v.constant_curvature.kind is CurvatureVerdictKind.CONSTANT
    assert v.constant_curvature.tau == pytest.approx(-1 / 3, abs=1e-2)
    for i in t.internal_edges:
        assert v.weight_classes[i].kind is WeightClass.DIVERGING


def test_detect_not_constant_on_frozen_metric():
    # a hand-made trajectory parked at a metric where several edges still gain
    # normalized weight while their curvatures differ widely
    t = builtin_tree("t2")
    w = np.array([1.1, 6.2, 0.3, 6.1, 0.6, 0.8, 3.8, 0.8])
    times = np.arange(0, 4.0, 0.1)
    tr = Trajectory(t, Variant.UNNORMALIZED, times, np.tile(w, (len(times), 1)))
    v = detect_limits(tr)
    assert v.constant_curvature.kind is CurvatureVerdictKind.NOT_CONSTANT
    assert v.constant_curvature.gap > 1.0


def test_detect_inconclusive_while_still_moving():
    t = builtin_tree("caterpillar")
    tr = integrate(t, None, FlowSpec(t_end=3, record_every=0.05))
    v = detect_limits(tr)
    assert v.constant_curvature.kind is CurvatureVerdictKind.INCONCLUSIVE


def test_detect_too_short(simple):
    tr = integrate(simple, None, FlowSpec(t_end=1.0, record_every=0.5))
    with pytest.raises(TrajectoryTooShort):
        detect_limits(tr)


def test_caterpillar_theorem_t1_t3(runs):
    for name in ("t1", "t3"):
        t, tr = runs[name]
        rep = check_caterpillar_theorem(t, tr)
        assert rep.info["caterpillar"] == "true"
        assert rep.passed, rep.to_text()


def test_caterpillar_theorem_t2(runs):
    t, tr = runs["t2"]
    rep = check_caterpillar_theorem(t, tr)
    assert rep.info["caterpillar"] == "false"
    assert rep.checks["internal_sum_grows"] and rep.passed, rep.to_text()


def test_caterpillar_theorem_needs_unnormalized(runs):
    t, tr = runs["t1"]
    with pytest.raises(ValueError):
        check_caterpillar_theorem(t, normalized_from_unnormalized(tr))


def test_t3_leaf_rises_then_falls():
    t = builtin_tree("t3", "skewed")
    tr = integrate(t, None, FlowSpec(t_end=40))
    i = t.edge_index(("x3", "x4"))
    k = tr.kappas[:, i]
    assert k[0] < 0 and k.max() > 0 and abs(k[-1]) < 1e-2
    w = tr.weights[:, i]
    peak = int(np.argmax(w))
    assert 0 < peak < len(w) - 1 and w[-1] < w[peak]


def test_balance_two_edge_internal_path():
    t = builtin_tree("t2")
    cut = [i for i in range(t.n_edges) if i not in t.internal_edges]
    s = balance_system(t, ["x2", "x3", "x4"], -1 / 3, cut)
    assert s.leaf_terminals == (False, False)
    assert np.allclose(s.coefficients, [-1 / 3, 1 / 3])
    w = np.ones(t.n_edges)
    assert s.residual(w) == 0.0


def test_balance_leaf_terminal():
    t = parse_tree("a b 1\nb c 1\nc d 1\nc e 1\n")
    s = balance_system(t, ["a", "b", "c"], -0.5, cut_edges=[("c", "d"), ("c", "e")])
    # coefficients (kappa - 1), -kappa with the leaf at the start
    assert s.leaf_terminals == (True, False)
    assert np.allclose(s.coefficients, [-1.5, 0.5])
    s = balance_system(t, ["c", "b", "a"], -0.5, cut_edges=[("c", "d"), ("c", "e")])
    assert np.allclose(s.coefficients, [-0.5, -(-0.5 - 1)])


def test_balance_k2_both_leaves():
    s = balance_system(parse_tree("a b 1\n"), ["a", "b"], -0.5)
    assert np.allclose(s.coefficients, [-2.5])


def test_balance_errors_and_warning():
    t = builtin_tree("t2")
    with pytest.raises(NotMaximalPath):
        balance_system(t, ["x2", "x3", "x4"], -1 / 3)  # ends still have live leaves
    with pytest.raises(NotMaximalPath):
        balance_system(t, ["x2", "x4"], -1 / 3)
    with pytest.raises(NotMaximalPath):
        balance_system(t, ["x2", "x3", "x2"], -1 / 3)
    with pytest.warns(ExtrapolatedBalanceWarning):
        s = balance_system(t, ["x1", "x2", "u1"], 0.0)
    assert s.extrapolated


def test_maximal_paths_t2():
    t = builtin_tree("t2")
    paths = maximal_paths(t, t.internal_edges)
    assert sorted(paths) == [("x2", "x3", "x4"), ("x2", "x3", "x5"), ("x4", "x3", "x5")]


def test_balance_report_t2(runs):
    t, tr = runs["t2"]
    rep = balance_report(t, tr, -1 / 3)
    assert len(rep.checks) == 3 and rep.passed, rep.to_text()


def test_balance_residual_on_spider_with_leaf_terminal(runs):
    t, tr = runs["spider"]
    rep = balance_report(t, tr)
    assert any("l1" in k for k in rep.checks)
    assert rep.passed, rep.to_text()


def test_prop_bounds(runs):
    t, tr = runs["simple"]
    rep = verify_prop_bounds(tr)
    assert rep.checks["max_leaf_bound u-x"] and rep.passed
    t, tr = runs["spider"]
    rep = verify_prop_bounds(tr)
    assert rep.checks["negative_bound c-l1"], rep.to_text()


def test_prop_bounds_simple_bound_too_strong_on_spider2():
    t = builtin_tree("spider2")
    rep = verify_prop_bounds(integrate(t, None, FlowSpec(t_end=40)))
    assert not rep.checks["negative_bound c-l1"]
    assert rep.checks["sharp_negative_bound c-l1"]


def test_initial_metric_changes_limit_weight():
    # a degree-2 spine edge keeps its weight, while the rest of the tree does not
    t = parse_tree("a1 s1 1\na2 s1 1\ns1 s2 1\ns2 s3 1\ns3 b1 1\ns3 b2 1\n")
    mid = t.edge_index(("s2", "s3"))
    runs = []
    for scale in (1.0, 5.0):
        w = np.array(t.initial_weights)
        w[t.edge_index(("s1", "s2"))] *= scale
        tr = integrate(t, w, FlowSpec(t_end=40))
        runs.append(normalized_from_unnormalized(tr).weights[-1, mid])
    assert runs[0] > runs[1] + 0.05


def test_text_reports(runs):
    t, tr = runs["t2"]
    text = prediction_text(t, predict_limits(t)) + verdict_text(t, detect_limits(tr))
    for line in text.splitlines():
        assert line.startswith("[") or ": " in line
    assert "constant_curvature: ConstantCurvature(-0.333333)" in text
