"""Verdicts on long-time behaviour: predicted and detected limits.

Predictions are pure functions of the topology.  Detection works on a
finite trajectory and only looks at a tail window, so every verdict is a
finite-horizon surrogate for an asymptotic statement.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .flow import Trajectory, Variant
from .tree_model import CaterpillarReport, WeightedTree, caterpillar_classify, vertex_profile

TAIL_FRACTION = 0.25
CURVATURE_TOL = 1e-2
SLOPE_TOL = 1e-3
ZERO_LEVEL = 1e-6
MIN_TAIL_SAMPLES = 10


class TrajectoryTooShort(ValueError):
    pass


class NotMaximalPath(ValueError):
    pass


class ExtrapolatedBalanceWarning(UserWarning):
    """Balance equations used outside the negative-curvature regime."""


# -- structural prediction ---------------------------------------------


class LimitClass(enum.Enum):
    LEAF_IDENTITY_ONE = "LeafIdentityOne"
    LEAF_POSITIVE = "LeafPositive"
    LEAF_ZERO = "LeafZero"
    LEAF_NEGATIVE_BOUNDED = "LeafNegativeBounded"
    LEAF_STAR = "LeafStar"
    LEAF_K2 = "LeafK2"
    INTERNAL_ZERO = "InternalZero"
    INTERNAL_UNKNOWN = "InternalUnknown"


LEAF_CLASSES = frozenset(c for c in LimitClass if c.name.startswith("LEAF"))


@dataclass(frozen=True)
class EdgePrediction:
    """Predicted curvature limit of one edge.

    ``value`` is the limit when it is determined.  For
    ``LeafNegativeBounded`` it is ``None`` and ``bound`` holds the simple
    upper bound ``-d'/d`` while ``sharp_bound`` holds
    ``1 - (d - 2) / (d' + (d'' - 2) d'' / (d'' - 2 + d))``.
    ``hub`` is the non-leaf endpoint of a leaf edge.
    """

    edge: int
    kind: LimitClass
    value: float | None
    justification: str
    hub: str | None = None
    bound: float | None = None
    sharp_bound: float | None = None


@dataclass(frozen=True)
class LimitPrediction:
    edges: tuple[EdgePrediction, ...]
    caterpillar: CaterpillarReport
    expected_outcome: str

    def __getitem__(self, i) -> EdgePrediction:
        return self.edges[i]

    def __iter__(self):
        return iter(self.edges)


def _leaf_prediction(tree: WeightedTree, i: int, hub: str) -> EdgePrediction:
    p = vertex_profile(tree, hub)
    d, dl, di = p.degree, p.leaf_degree, p.internal_degree
    tag = f"d={d}, d'={dl} at {hub}"
    if d == 1:
        return EdgePrediction(i, LimitClass.LEAF_K2, 2.0, "single edge, kappa = 2 for all t", hub)
    if d == 2:
        return EdgePrediction(i, LimitClass.LEAF_IDENTITY_ONE, 1.0, f"{tag}: kappa = 1 for all t", hub)
    if dl == d:
        return EdgePrediction(i, LimitClass.LEAF_STAR, 2.0 / d, f"{tag}: star, limit 2/d", hub)
    if dl == d - 1:
        return EdgePrediction(i, LimitClass.LEAF_POSITIVE, 1.0 / (d - 1), f"{tag}: d'=d-1, limit 1/(d-1)", hub)
    if dl == d - 2:
        return EdgePrediction(i, LimitClass.LEAF_ZERO, 0.0, f"{tag}: d'=d-2, limit 0", hub)
    sharp = 1.0 - (d - 2) / (dl + (di - 2) * di / (di - 2 + d))
    return EdgePrediction(
        i, LimitClass.LEAF_NEGATIVE_BOUNDED, None, f"{tag}: d'<=d-3, eventually negative", hub, -dl / d, sharp
    )


def predict_limits(tree: WeightedTree) -> LimitPrediction:
    """Classify every edge's curvature limit from degrees alone."""
    out = []

    def flat_end(v):
        p = vertex_profile(tree, v)
        return p.degree == 2 or p.leaf_degree >= p.degree - 2

    for i, (u, v) in enumerate(tree.edges):
        du, dv = tree.degree(u), tree.degree(v)
        if min(du, dv) == 1:
            out.append(_leaf_prediction(tree, i, u if du >= dv else v))
        elif flat_end(u) and flat_end(v):
            out.append(EdgePrediction(i, LimitClass.INTERNAL_ZERO, 0.0, "both ends have at most two internal edges"))
        else:
            out.append(EdgePrediction(i, LimitClass.INTERNAL_UNKNOWN, None, "an end has three or more internal edges"))
    cat = caterpillar_classify(tree)
    if cat.is_caterpillar:
        outcome = "caterpillar: curvature may converge to constant 0 on the positive support"
    else:
        outcome = "non-caterpillar: some internal weight diverges; constant curvature 0 is impossible"
    return LimitPrediction(tuple(out), cat, outcome)


# -- empirical detection -----------------------------------------------


class WeightClass(enum.Enum):
    ZERO = "Zero"
    FINITE = "Finite"
    DIVERGING = "Diverging"


@dataclass(frozen=True)
class WeightLimit:
    kind: WeightClass
    value: float | None = None


class CurvatureVerdictKind(enum.Enum):
    CONSTANT = "ConstantCurvature"
    NOT_CONSTANT = "NotConstant"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class CurvatureVerdict:
    kind: CurvatureVerdictKind
    tau: float | None = None
    gap: float | None = None

    def is_constant_zero(self, tol: float = CURVATURE_TOL) -> bool:
        return self.kind is CurvatureVerdictKind.CONSTANT and abs(self.tau) <= tol


@dataclass(frozen=True, eq=False)
class EmpiricalVerdict:
    """Tail-window summary of one trajectory.

    ``weight_classes`` describe the trajectory's own weights (unnormalized
    or normalized); ``normalized_classes`` always describe the normalized
    weights.  ``log_slope`` is the tail mean of d log w~/dt = -kappa.
    """

    t_start: float
    weight_classes: tuple[WeightLimit, ...]
    normalized_classes: tuple[WeightLimit, ...]
    kappa_tail: np.ndarray
    kappa_variation: np.ndarray
    log_slope: np.ndarray
    e_plus: tuple[int, ...]
    constant_curvature: CurvatureVerdict


def _tail(traj: Trajectory, tail_fraction: float) -> slice:
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    n = len(traj)
    k = int(math.ceil(n * tail_fraction))
    if k < MIN_TAIL_SAMPLES:
        raise TrajectoryTooShort(f"tail window has {k} samples, need {MIN_TAIL_SAMPLES}")
    return slice(n - k, n)


def _tail_mean(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.trapezoid(y, t, axis=0) / (t[-1] - t[0])


def _classify(w: np.ndarray, slope: np.ndarray, allow_diverging: bool) -> tuple[WeightLimit, ...]:
    out = []
    for j in range(w.shape[1]):
        col = w[:, j]
        if allow_diverging and slope[j] >= SLOPE_TOL:
            out.append(WeightLimit(WeightClass.DIVERGING))
        elif slope[j] <= -SLOPE_TOL or (col[-1] <= ZERO_LEVEL and col[-1] < col[0]):
            out.append(WeightLimit(WeightClass.ZERO))
        else:
            out.append(WeightLimit(WeightClass.FINITE, float(col[-1])))
    return tuple(out)


def detect_limits(traj: Trajectory, tail_fraction: float = TAIL_FRACTION, tol: float = CURVATURE_TOL) -> EmpiricalVerdict:
    """Estimate weight and curvature limits from the tail of a trajectory."""
    sl = _tail(traj, tail_fraction)
    t = traj.times[sl]
    k = traj.kappas[sl]
    w = traj.weights[sl]
    wn = w / w.sum(axis=1, keepdims=True)

    kappa_tail = _tail_mean(t, k)
    variation = k.max(axis=0) - k.min(axis=0)
    log_slope = -kappa_tail
    # d log(w_e / sum w)/dt = -kappa_e + sum_h kappa_h w_h / sum_h w_h
    drift = _tail_mean(t, np.sum(k * wn, axis=1))
    norm_slope = log_slope + drift

    normalized = traj.variant is Variant.NORMALIZED
    own = _classify(w, norm_slope if normalized else log_slope, allow_diverging=not normalized)
    ncls = _classify(wn, norm_slope, allow_diverging=False)

    e_plus = tuple(i for i, c in enumerate(ncls) if c.kind is WeightClass.FINITE and c.value > 0)
    if not e_plus:
        verdict = CurvatureVerdict(CurvatureVerdictKind.INCONCLUSIVE)
    else:
        vals = kappa_tail[list(e_plus)]
        gap = float(vals.max() - vals.min())
        if gap <= tol:
            verdict = CurvatureVerdict(CurvatureVerdictKind.CONSTANT, float(vals.mean()), gap)
        elif np.any(variation[list(e_plus)] > tol):
            verdict = CurvatureVerdict(CurvatureVerdictKind.INCONCLUSIVE, None, gap)
        else:
            verdict = CurvatureVerdict(CurvatureVerdictKind.NOT_CONSTANT, None, gap)
    return EmpiricalVerdict(float(t[0]), own, ncls, kappa_tail, variation, log_slope, e_plus, verdict)


# -- caterpillar theorem -------------------------------------------------


@dataclass(frozen=True)
class CheckReport:
    """Named pass/fail checks with one detail line each."""

    title: str
    checks: dict[str, bool]
    details: dict[str, str] = field(default_factory=dict)
    info: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_text(self) -> str:
        lines = [f"[{self.title}]"]
        for k, v in self.info.items():
            lines.append(f"{k}: {v}")
        for k, ok in self.checks.items():
            lines.append(f"{k}: {'pass' if ok else 'FAIL'}")
            if k in self.details:
                lines.append(f"{k}.detail: {self.details[k]}")
        lines.append(f"passed: {str(self.passed).lower()}")
        return "\n".join(lines) + "\n"


def _require_unnormalized(traj: Trajectory):
    if traj.variant is not Variant.UNNORMALIZED:
        raise ValueError("expected an unnormalized trajectory")


def _log_slope_fit(t: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(t, y, 1)[0])


def check_caterpillar_theorem(tree: WeightedTree, traj: Trajectory, tol: float = 5e-2) -> CheckReport:
    """Check the caterpillar dichotomy on one unnormalized run."""
    _require_unnormalized(traj)
    pred = predict_limits(tree)
    cat = pred.caterpillar
    verdict = detect_limits(traj)
    kt = verdict.kappa_tail
    checks, details = {}, {}
    info = {"caterpillar": str(cat.is_caterpillar).lower()}
    sl = _tail(traj, TAIL_FRACTION)

    if cat.is_caterpillar:
        info["spine"] = " ".join(cat.spine)
        bad = [
            f"{tree.edge_name(i)}={kt[i]:.4g} vs {pred[i].value:.4g}"
            for i in tree.leaf_edges
            if abs(kt[i] - pred[i].value) > tol
        ]
        checks["leaf_curvature_limits"] = not bad
        details["leaf_curvature_limits"] = ", ".join(bad) or "all leaves match"

        bad = [f"{tree.edge_name(i)}={kt[i]:.4g}" for i in tree.internal_edges if abs(kt[i]) > tol]
        checks["internal_curvature_zero"] = not bad
        details["internal_curvature_zero"] = ", ".join(bad) or "all internal tails near 0"

        if sum(1 for v in tree.vertices if tree.degree(v) >= 2) >= 2:
            bad = [
                tree.edge_name(i)
                for i in tree.leaf_edges
                if verdict.normalized_classes[i].kind is not WeightClass.ZERO
            ]
            checks["normalized_leaf_weights_zero"] = not bad
            details["normalized_leaf_weights_zero"] = ", ".join(bad) or "all leaves vanish"
        else:
            info["normalized_leaf_weights_zero"] = "not applicable (at most one internal vertex)"

        interior = set(cat.spine[1:-1])
        members = list(tree.internal_edges) + [
            i for i in tree.leaf_edges if pred[i].hub in interior
        ]
        slope = -float(kt[members].sum()) if members else 0.0
        checks["bounded_product"] = slope <= SLOPE_TOL
        details["bounded_product"] = f"tail log-slope of P = {slope:.3g} over {len(members)} edges"
    else:
        info["witnesses"] = " ".join(cat.witnesses)
        t = traj.times[sl]
        S = traj.weights[sl][:, list(tree.internal_edges)].sum(axis=1)
        slope = _log_slope_fit(t, np.log(S))
        checks["internal_sum_grows"] = slope > 0
        details["internal_sum_grows"] = f"tail slope of log S = {slope:.4g}"

        div = [tree.edge_name(i) for i in tree.internal_edges if verdict.weight_classes[i].kind is WeightClass.DIVERGING]
        checks["internal_weight_diverges"] = bool(div)
        details["internal_weight_diverges"] = ", ".join(div) or "none"

        flat = [i for i in range(tree.n_edges) if abs(kt[i]) <= CURVATURE_TOL]
        bad = [tree.edge_name(i) for i in flat if verdict.normalized_classes[i].kind is not WeightClass.ZERO]
        checks["zero_curvature_edges_vanish"] = not bad
        details["zero_curvature_edges_vanish"] = ", ".join(bad) or f"{len(flat)} zero-curvature edges, all vanish"
    return CheckReport("caterpillar_theorem", checks, details, info)


# -- balanced weights on maximal paths ---------------------------------


@dataclass(frozen=True, eq=False)
class BalancedPathSystem:
    """Alternating linear relation on a maximal path of the positive support."""

    path: tuple[str, ...]
    edges: tuple[int, ...]
    leaf_terminals: tuple[bool, bool]
    kappa: float
    coefficients: np.ndarray
    extrapolated: bool = False

    def residual(self, w) -> float:
        """``|sum c_i w_i|`` for a full per-edge weight vector ``w``."""
        w = np.asarray(w, dtype=float)[list(self.edges)]
        return abs(math.fsum(self.coefficients * w))

    def relative_residual(self, w) -> float:
        """Residual divided by the total weight along the path."""
        w = np.asarray(w, dtype=float)
        return self.residual(w) / math.fsum(w[list(self.edges)])


def balance_system(tree: WeightedTree, path, kappa: float, cut_edges=frozenset()) -> BalancedPathSystem:
    """Coefficients of the alternating balance equation on ``path``.

    ``path`` is a vertex sequence.  Each end must be a leaf of the tree or
    a vertex whose other edges are all in ``cut_edges``.  Interior
    coefficients alternate ``+kappa, -kappa, ...``; a leaf terminal uses
    ``kappa - 1`` in place of ``kappa``.
    """
    path = tuple(path)
    cut = {tree.edge_index(e) for e in cut_edges}
    if len(path) < 2 or len(set(path)) != len(path):
        raise NotMaximalPath(f"not a simple path: {path}")
    try:
        edges = tuple(tree.edge_index((a, b)) for a, b in zip(path, path[1:]))
    except KeyError:
        raise NotMaximalPath(f"consecutive vertices are not adjacent in {path}") from None
    if cut & set(edges):
        raise NotMaximalPath("path uses a cutting edge")

    def live_degree(v):
        return sum(1 for x in tree.adjacency[v] if tree.edge_index((v, x)) not in cut)

    for end in (path[0], path[-1]):
        if live_degree(end) != 1:
            raise NotMaximalPath(f"end vertex {end!r} is not terminal")
    leaf_ends = (tree.is_leaf(path[0]), tree.is_leaf(path[-1]))

    extrapolated = kappa >= 0
    if extrapolated:
        warnings.warn(
            f"balance relation taken with kappa = {kappa} >= 0, outside its proven range",
            ExtrapolatedBalanceWarning,
            stacklevel=2,
        )
    l = len(edges)
    c = np.array([(-1) ** i * kappa for i in range(l)], dtype=float)
    if leaf_ends[0]:
        c[0] -= 1.0
    if leaf_ends[1]:
        c[-1] -= (-1) ** (l - 1)
    return BalancedPathSystem(path, edges, leaf_ends, float(kappa), c, extrapolated)


def maximal_paths(tree: WeightedTree, positive_edges) -> list[tuple[str, ...]]:
    """All terminal-to-terminal paths inside each component of ``positive_edges``."""
    pos = sorted({tree.edge_index(e) for e in positive_edges})
    nbrs: dict[str, list[str]] = {}
    for i in pos:
        u, v = tree.edges[i]
        nbrs.setdefault(u, []).append(v)
        nbrs.setdefault(v, []).append(u)
    terminals = sorted(v for v, n in nbrs.items() if len(n) == 1)
    paths = []
    for a, b in combinations(terminals, 2):
        p = tree.path(a, b)
        if all(tree.edge_index((x, y)) in pos for x, y in zip(p, p[1:])):
            paths.append(tuple(p))
    return paths


def balance_report(tree: WeightedTree, traj: Trajectory, kappa: float | None = None, tol: float = CURVATURE_TOL) -> CheckReport:
    """Evaluate every maximal path's balance relation on the final normalized metric."""
    verdict = detect_limits(traj)
    if kappa is None:
        kappa = verdict.constant_curvature.tau
        if kappa is None:
            return CheckReport("balanced_weights", {}, info={"status": "no constant curvature detected"})
    w = traj.weights[-1] / traj.weights[-1].sum()
    cut = frozenset(i for i in range(tree.n_edges) if i not in verdict.e_plus)
    checks, details = {}, {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolatedBalanceWarning)
        for p in maximal_paths(tree, verdict.e_plus):
            sys_ = balance_system(tree, p, kappa, cut)
            r = sys_.relative_residual(w)
            key = "path " + "-".join(p)
            checks[key] = r <= tol
            details[key] = f"relative residual {r:.3g}"
    info = {"kappa": f"{kappa!r}", "extrapolated": str(kappa >= 0).lower()}
    return CheckReport("balanced_weights", checks, details, info)


# -- leaf curvature bounds ---------------------------------------------


def verify_prop_bounds(traj: Trajectory, slack: float = 1e-3) -> CheckReport:
    """Per-leaf curvature bounds on an unnormalized run.

    (a) leaves with d' <= d - 3 end below ``-d'/d + slack``; the sharper
        bound is reported alongside.
    (b) at every vertex with d >= 3, a leaf of maximal initial weight keeps
        ``kappa > 1 - (d - 2)/d'`` at every sample.
    (c) leaves predicted to have limit 1/(d-1) or 0 have bounded weights
        that decrease over the tail window.
    """
    _require_unnormalized(traj)
    tree = traj.tree
    pred = predict_limits(tree)
    kt = detect_limits(traj).kappa_tail
    sl = _tail(traj, TAIL_FRACTION)
    checks, details = {}, {}

    for i in tree.leaf_edges:
        p = pred[i]
        name = tree.edge_name(i)
        if p.kind is LimitClass.LEAF_NEGATIVE_BOUNDED:
            checks[f"negative_bound {name}"] = kt[i] <= p.bound + slack
            details[f"negative_bound {name}"] = (
                f"tail kappa {kt[i]:.6g}, bound -d'/d = {p.bound:.6g}, sharp bound {p.sharp_bound:.6g}"
            )
            checks[f"sharp_negative_bound {name}"] = kt[i] <= p.sharp_bound + slack
        if p.kind in (LimitClass.LEAF_POSITIVE, LimitClass.LEAF_ZERO):
            col = traj.weights[sl, i]
            ok = bool(np.all(np.isfinite(traj.weights[:, i])) and np.all(np.diff(col) <= 0))
            checks[f"decreasing_tail {name}"] = ok
            details[f"decreasing_tail {name}"] = f"w from {col[0]:.4g} to {col[-1]:.4g}"

    by_hub: dict[str, list[int]] = {}
    for i in tree.leaf_edges:
        hub = pred[i].hub
        if tree.degree(hub) >= 3:
            by_hub.setdefault(hub, []).append(i)
    w0 = traj.weights[0]
    for hub, leaves in sorted(by_hub.items()):
        prof = vertex_profile(tree, hub)
        bound = 1.0 - (prof.degree - 2) / prof.leaf_degree
        top = max(leaves, key=lambda i: (w0[i], -i))
        k = traj.kappas[:, top]
        key = f"max_leaf_bound {tree.edge_name(top)}"
        if prof.internal_degree:
            checks[key] = bool(np.all(k > bound))
            details[key] = f"min kappa {k.min():.12g} > {bound:.12g}"
        else:
            # star centre: tied leaves give equality, so only >= can hold
            checks[key] = bool(np.all(k >= bound - 1e-12))
            details[key] = f"min kappa {k.min():.12g} >= {bound:.12g} (no internal edge at {hub})"
    return CheckReport("leaf_bounds", checks, details)


def prediction_text(tree: WeightedTree, pred: LimitPrediction) -> str:
    cat = pred.caterpillar
    lines = ["[classification]", f"caterpillar: {str(cat.is_caterpillar).lower()}"]
    if cat.is_caterpillar:
        lines.append(f"spine: {' '.join(cat.spine)}")
    else:
        lines.append(f"witnesses: {' '.join(cat.witnesses)}")
    lines.append(f"expected: {pred.expected_outcome}")
    for p in pred:
        val = "unknown" if p.value is None else repr(p.value)
        extra = f" bound={p.bound!r} sharp_bound={p.sharp_bound!r}" if p.bound is not None else ""
        lines.append(f"edge {tree.edge_name(p.edge)}: {p.kind.value} limit={val}{extra} ({p.justification})")
    return "\n".join(lines) + "\n"


def verdict_text(tree: WeightedTree, v: EmpiricalVerdict) -> str:
    lines = ["[limits]", f"tail_start: {v.t_start!r}"]
    for i in range(tree.n_edges):
        wc, nc = v.weight_classes[i], v.normalized_classes[i]
        lines.append(
            f"edge {tree.edge_name(i)}: weight={wc.kind.value} normalized={nc.kind.value} "
            f"kappa_tail={v.kappa_tail[i]:.6g} variation={v.kappa_variation[i]:.3g}"
        )
    lines.append("e_plus: " + " ".join(tree.edge_name(i) for i in v.e_plus))
    cc = v.constant_curvature
    lines.append(f"constant_curvature: {cc.kind.value}" + (f"({cc.tau:.6g})" if cc.tau is not None else ""))
    return "\n".join(lines) + "\n"
