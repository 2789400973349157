"""Lin-Lu-Yau curvature on weighted trees.

The default parameter function is ``gamma(x) = 1/x``, for which the edge
curvature has the closed form

    kappa_uv = (2 - d_u) / (w_uv D_u) + (2 - d_v) / (w_uv D_v),
    D_u = sum over edges ux of 1 / w_ux.

The general power family ``gamma(x) = A x**a`` is supported by
:func:`kappa_general` and :func:`kappa_directional`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tree_model import UnknownVertexError, WeightedTree


class NotEndpointError(ValueError):
    pass


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class Power:
    """``gamma(x) = A * x**a`` with ``A > 0`` and ``a != 0``."""

    A: float = 1.0
    a: float = -1.0

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("gamma coefficient A must be positive")
        if self.a == 0:
            raise ValueError("gamma must be one-to-one, exponent a cannot be 0")

    def __call__(self, x):
        return self.A * np.power(x, self.a)

    @property
    def is_reciprocal(self) -> bool:
        return self.A == 1.0 and self.a == -1.0


RECIPROCAL = Power(1.0, -1.0)


@dataclass(frozen=True)
class Metric:
    """Positive edge weights in canonical edge order."""

    weights: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        check_weights(w)
        if self.normalized and abs(math.fsum(w) - 1.0) > 1e-9:
            raise MetricError(f"normalized metric must sum to 1, sums to {math.fsum(w)!r}")

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    def __len__(self):
        return len(self.weights)


def check_weights(w, n_edges: int | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or (n_edges is not None and w.shape[0] != n_edges):
        raise MetricError(f"expected a vector of {n_edges} edge weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise MetricError("edge weights must be finite and strictly positive")
    return w


@dataclass(frozen=True)
class CurvatureVector:
    """Per-edge curvature with its two endpoint parts.

    ``directional[i] = (kappa_{u->v}, kappa_{v->u})`` for edge ``(u, v)`` in
    canonical order; ``weighted_degree`` is indexed by vertex.
    """

    kappa: np.ndarray
    directional: np.ndarray
    weighted_degree: np.ndarray

    @property
    def total(self) -> float:
        return math.fsum(self.kappa)


def resolve_weights(tree: WeightedTree, w) -> np.ndarray:
    """Validated weights, defaulting to the tree's initial metric when ``w`` is None."""
    return check_weights(tree.initial_weights if w is None else w, tree.n_edges)


def weighted_degrees(tree: WeightedTree, w, gamma: Power = RECIPROCAL) -> np.ndarray:
    """``D_v`` for every vertex, fsum-accumulated."""
    g = gamma(resolve_weights(tree, w))
    terms: list[list[float]] = [[] for _ in tree.vertices]
    for i, (a, b) in enumerate(zip(tree.head, tree.tail)):
        terms[a].append(g[i])
        terms[b].append(g[i])
    return np.array([math.fsum(t) for t in terms])


def weighted_degree(tree: WeightedTree, w, v: str, gamma: Power = RECIPROCAL) -> float:
    w = resolve_weights(tree, w)
    if v not in tree.adjacency:
        raise UnknownVertexError(v)
    return math.fsum(float(gamma(w[tree.edge_index((v, x))])) for x in tree.adjacency[v])


def kappa_values(tree: WeightedTree, w) -> np.ndarray:
    """Vectorised closed-form curvature for ``gamma = 1/x``; no validation.

    This is the hot path of the flow integrator.
    """
    n = tree.n_vertices
    inv = 1.0 / w
    D = np.bincount(tree.head, inv, n) + np.bincount(tree.tail, inv, n)
    two_minus_d = 2.0 - tree.degrees
    return (two_minus_d[tree.head] / D[tree.head] + two_minus_d[tree.tail] / D[tree.tail]) * inv


def kappa_all(tree: WeightedTree, w=None) -> CurvatureVector:
    w = resolve_weights(tree, w)
    D = weighted_degrees(tree, w)
    two_minus_d = 2.0 - tree.degrees
    k_uv = two_minus_d[tree.head] / (w * D[tree.head])
    k_vu = two_minus_d[tree.tail] / (w * D[tree.tail])
    return CurvatureVector(k_uv + k_vu, np.column_stack([k_uv, k_vu]), D)


def kappa_edge(tree: WeightedTree, w, e) -> float:
    w = resolve_weights(tree, w)
    i = tree.edge_index(e)
    u, v = tree.edges[i]
    return float(
        (2 - tree.degree(u)) / (w[i] * weighted_degree(tree, w, u))
        + (2 - tree.degree(v)) / (w[i] * weighted_degree(tree, w, v))
    )


def kappa_directional(tree: WeightedTree, w, e, u: str, gamma: Power = RECIPROCAL) -> float:
    """The part of ``kappa_e`` contributed by endpoint ``u``.

    General form ``(2 w_e gamma(w_e) - sum_x w_ux gamma(w_ux)) / (w_e D_u)``,
    which is ``(2 - d_u) / (w_e D_u)`` for ``gamma = 1/x``.
    """
    w = resolve_weights(tree, w)
    i = tree.edge_index(e)
    if u not in tree.edges[i]:
        raise NotEndpointError(f"{u!r} is not an endpoint of edge {tree.edge_name(i)}")
    if gamma.is_reciprocal:
        return float((2 - tree.degree(u)) / (w[i] * weighted_degree(tree, w, u)))
    return _directional_general(tree, w, i, u, gamma)


def _directional_general(tree, w, i, u, gamma) -> float:
    ws = np.array([w[tree.edge_index((u, x))] for x in tree.adjacency[u]])
    gs = gamma(ws)
    D = math.fsum(gs)
    return float((2 * w[i] * gamma(w[i]) - math.fsum(ws * gs)) / (w[i] * D))


def kappa_general(tree: WeightedTree, w, e, gamma: Power = RECIPROCAL) -> float:
    """Curvature for an arbitrary power-law ``gamma`` (both endpoint parts)."""
    w = resolve_weights(tree, w)
    i = tree.edge_index(e)
    u, v = tree.edges[i]
    return _directional_general(tree, w, i, u, gamma) + _directional_general(tree, w, i, v, gamma)


def kappa_weight_sum(tree: WeightedTree, w=None) -> float:
    """``sum_h kappa_h w_h`` via the vertex identity ``sum_u (2 - d_u) d_u / D_u``."""
    w = resolve_weights(tree, w)
    D = weighted_degrees(tree, w)
    d = tree.degrees
    return math.fsum((2 - d) * d / D)


def kappa_derivative(tree: WeightedTree, w=None) -> np.ndarray:
    """Time derivative of every ``kappa_e`` along the unnormalized flow.

    kappa'_uv = (d_u - 2)/(w_uv D_u) * (sum_x (kappa_ux / w_ux) / D_u - kappa_uv)
              + the same with u replaced by v.
    """
    w = resolve_weights(tree, w)
    cv = kappa_all(tree, w)
    k, D = cv.kappa, cv.weighted_degree
    n = tree.n_vertices
    ratio = k / w
    S = np.bincount(tree.head, ratio, n) + np.bincount(tree.tail, ratio, n)
    out = np.zeros_like(k)
    for end in (tree.head, tree.tail):
        pref = (tree.degrees[end] - 2) / (w * D[end])
        out += pref * (S[end] / D[end] - k)
    return out
