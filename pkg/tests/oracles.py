"""Reference computations that share no code with the package.

Everything here works from plain edge lists and dictionaries.
"""

from __future__ import annotations

import itertools
import math

import networkx as nx
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linprog


def graph_of(tree) -> nx.Graph:
    g = nx.Graph()
    for (u, v), w in zip(tree.edges, tree.initial_weights):
        g.add_edge(u, v, weight=float(w))
    return g


def set_weights(g: nx.Graph, edges, w) -> nx.Graph:
    g = g.copy()
    for (u, v), x in zip(edges, w):
        g[u][v]["weight"] = float(x)
    return g


def distance_matrix(g: nx.Graph, order) -> np.ndarray:
    d = dict(nx.all_pairs_dijkstra_path_length(g, weight="weight"))
    return np.array([[d[a][b] for b in order] for a in order])


def lp_wasserstein(dist: np.ndarray, mu: np.ndarray, nu: np.ndarray) -> float:
    """W1 by linear programming over the full coupling polytope."""
    n = len(mu)
    A = []
    for i in range(n):
        row = np.zeros((n, n))
        row[i, :] = 1
        A.append(row.ravel())
    for j in range(n):
        col = np.zeros((n, n))
        col[:, j] = 1
        A.append(col.ravel())
    res = linprog(
        dist.ravel(),
        A_eq=np.array(A),
        b_eq=np.concatenate([mu, nu]),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    assert res.status == 0, res.message
    return float(res.fun)


def walk(g: nx.Graph, x, alpha: float, gamma=lambda w: 1.0 / w) -> dict:
    nb = list(g[x])
    gs = [gamma(g[x][y]["weight"]) for y in nb]
    tot = sum(gs)
    m = {y: (1 - alpha) * gy / tot for y, gy in zip(nb, gs)}
    m[x] = alpha
    return m


def lp_curvature(g: nx.Graph, u, v, alpha: float = 0.5, gamma=lambda w: 1.0 / w) -> float:
    """``kappa_alpha / (1 - alpha)`` with W1 from the LP."""
    order = sorted(g.nodes)
    dist = distance_matrix(g, order)
    mu = np.zeros(len(order))
    nu = np.zeros(len(order))
    for x, m in walk(g, u, alpha, gamma).items():
        mu[order.index(x)] += m
    for x, m in walk(g, v, alpha, gamma).items():
        nu[order.index(x)] += m
    W = lp_wasserstein(dist, mu, nu)
    return (1 - W / g[u][v]["weight"]) / (1 - alpha)


def dict_curvature(g: nx.Graph) -> dict:
    """Closed-form curvature written directly on the graph, keyed by frozenset edge."""
    D = {x: sum(1.0 / g[x][y]["weight"] for y in g[x]) for x in g}
    out = {}
    for u, v, data in g.edges(data=True):
        w = data["weight"]
        out[frozenset((u, v))] = (2 - g.degree(u)) / (w * D[u]) + (2 - g.degree(v)) / (w * D[v])
    return out


def reference_flow(tree, w0, t_eval, normalized=False, rtol=1e-12, atol=1e-14):
    """Integrate the flow with scipy's DOP853 on dict-based curvature."""
    g0 = graph_of(tree)
    edges = list(tree.edges)

    def rhs(_, w):
        k = dict_curvature(set_weights(g0, edges, w))
        kv = np.array([k[frozenset(e)] for e in edges])
        d = -kv * w
        if normalized:
            d = d + w * math.fsum(kv * w) / math.fsum(w)
        return d

    sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), np.asarray(w0, float), method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=atol)
    assert sol.success, sol.message
    return sol.y.T


def is_caterpillar_bruteforce(g: nx.Graph) -> bool:
    """Remove all leaves; a caterpillar leaves behind a path (or nothing)."""
    if g.number_of_nodes() <= 2:
        return True
    core = g.subgraph([x for x in g if g.degree(x) > 1])
    return core.number_of_nodes() <= 1 or (nx.is_connected(core) and max(d for _, d in core.degree()) <= 2)


def all_trees(max_n: int):
    """Every unlabelled tree on 2..max_n vertices, as edge lists with string names."""
    for n in range(2, max_n + 1):
        for t in nx.nonisomorphic_trees(n):
            yield [(f"v{a}", f"v{b}") for a, b in t.edges()]


def random_measure(rng, n, sparsity=0.5):
    p = rng.random(n) * (rng.random(n) < sparsity)
    if p.sum() == 0:
        p[rng.integers(n)] = 1.0
    return p / p.sum()


def pairs(seq):
    return itertools.combinations(seq, 2)
