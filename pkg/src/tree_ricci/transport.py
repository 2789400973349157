"""Curvature through optimal transport, independent of the closed form.

Random-walk measures are built from the edge weights, the 1-Wasserstein
distance is evaluated exactly on the tree path metric by the edge-split
formula

    W(mu, nu) = sum_e w_e * |mu(S_e) - nu(S_e)|,

where ``S_e`` is one component of ``T - e``, and the Lin-Lu-Yau curvature is
recovered from ``kappa_alpha / (1 - alpha)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .curvature import RECIPROCAL, Power, resolve_weights
from .tree_model import UnknownVertexError, WeightedTree, split_at_edge

MASS_TOL = 1e-12
LLY_ALPHAS = (0.5, 0.9, 0.99)


class AlphaOutOfRange(ValueError):
    pass


class MeasureNotNormalized(ValueError):
    pass


class NonlinearAlphaProfile(ArithmeticError):
    """``kappa_alpha / (1 - alpha)`` changed with alpha beyond tolerance."""


@dataclass(frozen=True)
class ProbabilityMeasure:
    masses: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "masses", dict(self.masses))
        if any(m < 0 for m in self.masses.values()):
            raise MeasureNotNormalized("negative mass")
        total = math.fsum(self.masses.values())
        if abs(total - 1.0) > MASS_TOL:
            raise MeasureNotNormalized(f"masses sum to {total!r}, not 1")

    def __getitem__(self, v):
        return self.masses.get(v, 0.0)

    def to_array(self, tree: WeightedTree) -> np.ndarray:
        out = np.zeros(tree.n_vertices)
        for v, m in self.masses.items():
            out[tree.vertex_index(v)] += m
        return out


@dataclass(frozen=True)
class PotentialFunction:
    values: Mapping[str, float]

    def __getitem__(self, v):
        return self.values[v]

    def dual_value(self, mu: ProbabilityMeasure, nu: ProbabilityMeasure) -> float:
        keys = set(mu.masses) | set(nu.masses)
        return math.fsum(self.values[x] * (mu[x] - nu[x]) for x in keys)

    def lipschitz_defect(self, tree: WeightedTree, w) -> float:
        """``max (g(x) - g(y) - d(x, y))`` over vertex pairs; <= 0 iff 1-Lipschitz."""
        dist = tree_distances(tree, w)
        g = np.array([self.values[v] for v in tree.vertices])
        return float(np.max(g[:, None] - g[None, :] - dist))


def _check_alpha(alpha: float):
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha!r}")


def walk_measure(tree: WeightedTree, w, x: str, alpha: float, gamma: Power = RECIPROCAL) -> ProbabilityMeasure:
    """Lazy random walk from ``x``: stay with probability ``alpha``, otherwise
    step to a neighbour ``y`` with probability proportional to ``gamma(w_xy)``."""
    _check_alpha(alpha)
    w = resolve_weights(tree, w)
    if x not in tree.adjacency:
        raise UnknownVertexError(x)
    nbrs = tree.adjacency[x]
    g = np.array([float(gamma(w[tree.edge_index((x, y))])) for y in nbrs])
    D = math.fsum(g)
    masses = {x: alpha}
    for y, gy in zip(nbrs, g):
        masses[y] = (1.0 - alpha) * gy / D
    return ProbabilityMeasure(masses)


def _as_mass(tree: WeightedTree, m) -> np.ndarray:
    if isinstance(m, ProbabilityMeasure):
        return m.to_array(tree)
    arr = np.asarray(m, dtype=float)
    if arr.shape != (tree.n_vertices,) or np.any(arr < 0) or abs(math.fsum(arr) - 1.0) > MASS_TOL:
        raise MeasureNotNormalized("expected a nonnegative vertex vector summing to 1")
    return arr


def wasserstein_tree(tree: WeightedTree, w, mu, nu) -> float:
    """Exact W1 between two vertex measures under the tree path metric."""
    w = resolve_weights(tree, w)
    diff = _as_mass(tree, mu) - _as_mass(tree, nu)
    order, parent, parent_edge = tree._rooted
    sub = diff.copy()
    terms = []
    for j in order[:0:-1]:
        terms.append(w[parent_edge[j]] * abs(sub[j]))
        sub[parent[j]] += sub[j]
    return math.fsum(terms)


def tree_distances(tree: WeightedTree, w) -> np.ndarray:
    """All-pairs weighted path distances (vertex order)."""
    w = resolve_weights(tree, w)
    n = tree.n_vertices
    out = np.zeros((n, n))
    for s in range(n):
        q = deque([s])
        seen = {s}
        while q:
            a = q.popleft()
            va = tree.vertices[a]
            for vb in tree.adjacency[va]:
                b = tree.vertex_index(vb)
                if b not in seen:
                    seen.add(b)
                    out[s, b] = out[s, a] + w[tree.edge_index((va, vb))]
                    q.append(b)
    return out


def kantorovich_potential(tree: WeightedTree, w, e) -> PotentialFunction:
    """Transport potential from ``mu_u`` to ``mu_v`` for the edge ``e = (u, v)``.

    ``g = w_ux + w_uv`` at neighbours x of u, ``w_uv`` at u, 0 at v and
    ``-w_vy`` at neighbours y of v.  Farther vertices get the signed distance
    to v (positive on u's side), which agrees with the case list on the
    support of both measures and keeps g 1-Lipschitz on the whole tree.
    """
    w = resolve_weights(tree, w)
    i = tree.edge_index(e)
    u, v = tree.edges[i]
    dist = tree_distances(tree, w)[tree.vertex_index(v)]
    u_side, _ = split_at_edge(tree, i)
    values = {}
    for x in tree.vertices:
        d = float(dist[tree.vertex_index(x)])
        values[x] = d if x in u_side else -d
    # exact case-list values on the two closed neighbourhoods
    values[u], values[v] = float(w[i]), 0.0
    for x in tree.adjacency[u]:
        if x != v:
            values[x] = float(w[tree.edge_index((u, x))] + w[i])
    for y in tree.adjacency[v]:
        if y != u:
            values[y] = -float(w[tree.edge_index((v, y))])
    return PotentialFunction(values)


def alpha_curvature(tree: WeightedTree, w, e, alpha: float, gamma: Power = RECIPROCAL) -> float:
    """``1 - W(mu_u, mu_v) / w_uv`` with lazy walks of idleness ``alpha``."""
    _check_alpha(alpha)
    w = resolve_weights(tree, w)
    i = tree.edge_index(e)
    u, v = tree.edges[i]
    mu = walk_measure(tree, w, u, alpha, gamma)
    nu = walk_measure(tree, w, v, alpha, gamma)
    return 1.0 - wasserstein_tree(tree, w, mu, nu) / w[i]


def lly_oracle(tree: WeightedTree, w, e, gamma: Power = RECIPROCAL, alphas=LLY_ALPHAS, tol: float = 1e-9) -> float:
    """Lin-Lu-Yau curvature from transport.

    On a tree ``kappa_alpha / (1 - alpha)`` is constant for ``alpha >= 1/2``,
    so the limit ``alpha -> 1`` equals the common value at the sample points.
    Disagreement beyond ``tol`` raises :class:`NonlinearAlphaProfile`.
    """
    vals = [alpha_curvature(tree, w, e, a, gamma) / (1.0 - a) for a in alphas]
    spread = max(vals) - min(vals)
    if spread > tol * max(1.0, max(abs(x) for x in vals)):
        raise NonlinearAlphaProfile(
            f"edge {tree.edge_name(e)}: kappa_alpha/(1-alpha) = {vals} over alphas {list(alphas)}"
        )
    return math.fsum(vals) / len(vals)
