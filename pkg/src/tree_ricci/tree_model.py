"""Finite weighted trees: parsing, validation and structural queries.

A :class:`WeightedTree` is immutable.  Vertices are sorted by name (code point
order, which coincides with UTF-8 byte order) and edges by
``(min endpoint, max endpoint)``; every per-edge vector in the package uses
this canonical edge order.
"""

from __future__ import annotations

import enum
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class TreeError(ValueError):
    """Base class for invalid tree input.  ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TreeParseError(TreeError):
    pass


class CycleError(TreeError):
    pass


class DisconnectedError(TreeError):
    pass


class NonPositiveWeightError(TreeError):
    pass


class DuplicateEdgeError(TreeError):
    pass


class SelfLoopError(TreeError):
    pass


class UnknownVertexError(KeyError):
    pass


class UnknownEdgeError(KeyError):
    pass


class EdgeClass(enum.Enum):
    LEAF = "leaf"
    INTERNAL = "internal"


@dataclass(frozen=True)
class VertexProfile:
    degree: int
    leaf_degree: int
    internal_degree: int

    def __post_init__(self):
        assert self.degree == self.leaf_degree + self.internal_degree


@dataclass(frozen=True)
class CaterpillarReport:
    is_caterpillar: bool
    spine: tuple[str, ...]
    leaf_counts: dict[str, int] = field(default_factory=dict)
    witnesses: tuple[str, ...] = ()


Edge = tuple[str, str]


def _canon(u: str, v: str) -> Edge:
    return (u, v) if u < v else (v, u)


class WeightedTree:
    """A finite tree with positive initial edge weights.

    Build one with :meth:`from_edges` or :func:`parse_tree`; the constructor
    assumes already-validated input.
    """

    def __init__(self, edges: Sequence[Edge], weights: Sequence[float]):
        order = sorted(range(len(edges)), key=lambda i: edges[i])
        self.edges: tuple[Edge, ...] = tuple(edges[i] for i in order)
        w = np.array([float(weights[i]) for i in order], dtype=float)
        w.setflags(write=False)
        self.initial_weights = w
        self.vertices: tuple[str, ...] = tuple(sorted({x for e in self.edges for x in e}))
        self._vindex = {v: i for i, v in enumerate(self.vertices)}
        self._eindex = {e: i for i, e in enumerate(self.edges)}
        nbrs: dict[str, list[str]] = {v: [] for v in self.vertices}
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self.adjacency: dict[str, tuple[str, ...]] = {v: tuple(sorted(n)) for v, n in nbrs.items()}

        self.head = np.array([self._vindex[u] for u, _ in self.edges], dtype=np.intp)
        self.tail = np.array([self._vindex[v] for _, v in self.edges], dtype=np.intp)
        self.degrees = np.array([len(self.adjacency[v]) for v in self.vertices], dtype=np.intp)
        for arr in (self.head, self.tail, self.degrees):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, triples: Iterable[tuple[str, str, float]], lines: Sequence[int] | None = None):
        """Validate ``(u, v, weight)`` triples and build a tree.

        ``lines`` optionally maps each triple to a source line number used in
        error messages.
        """
        triples = list(triples)
        if lines is None:
            lines = list(range(1, len(triples) + 1))
        if not triples:
            raise TreeParseError("tree has no edges (single-vertex trees are not supported)")
        seen: dict[Edge, int] = {}
        parent: dict[str, str] = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for (u, v, w), ln in zip(triples, lines):
            if u == v:
                raise SelfLoopError(f"self-loop at vertex {u!r}", ln)
            if not (w > 0) or not np.isfinite(w):
                raise NonPositiveWeightError(f"weight of edge {u}-{v} must be positive and finite, got {w!r}", ln)
            e = _canon(u, v)
            if e in seen:
                raise DuplicateEdgeError(f"edge {e[0]}-{e[1]} already given on line {seen[e]}", ln)
            seen[e] = ln
            for x in e:
                parent.setdefault(x, x)
            ru, rv = find(u), find(v)
            if ru == rv:
                raise CycleError(f"edge {e[0]}-{e[1]} closes a cycle", ln)
            parent[ru] = rv

        root = find(min(parent))
        for (u, v, _), ln in zip(triples, lines):
            if find(u) != root:
                raise DisconnectedError(f"edge {u}-{v} is not connected to vertex {min(parent)!r}", ln)
        return cls([_canon(u, v) for u, v, _ in triples], [w for *_, w in triples])

    # -- lookups ---------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def vertex_index(self, v: str) -> int:
        try:
            return self._vindex[v]
        except KeyError:
            raise UnknownVertexError(v) from None

    def edge_index(self, e) -> int:
        """Index of edge ``e``, given as an index or as an endpoint pair in either order."""
        if isinstance(e, (int, np.integer)):
            if not 0 <= e < len(self.edges):
                raise UnknownEdgeError(e)
            return int(e)
        u, v = e
        try:
            return self._eindex[_canon(u, v)]
        except KeyError:
            raise UnknownEdgeError(e) from None

    def degree(self, v: str) -> int:
        try:
            return len(self.adjacency[v])
        except KeyError:
            raise UnknownVertexError(v) from None

    def is_leaf(self, v: str) -> bool:
        return self.degree(v) == 1

    def edge_name(self, e) -> str:
        u, v = self.edges[self.edge_index(e)]
        return f"{u}-{v}"

    def with_weights(self, weights: Sequence[float]) -> "WeightedTree":
        """Same topology with a different initial metric (canonical edge order)."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.n_edges,):
            raise ValueError(f"expected {self.n_edges} weights, got shape {weights.shape}")
        return WeightedTree.from_edges([(u, v, w) for (u, v), w in zip(self.edges, weights)])

    def __repr__(self):
        return f"WeightedTree({self.n_vertices} vertices, {self.n_edges} edges)"

    def to_text(self, weights: Sequence[float] | None = None) -> str:
        weights = self.initial_weights if weights is None else weights
        return "".join(f"{u} {v} {float(w)!r}\n" for (u, v), w in zip(self.edges, weights))

    # -- cached structure ----------------------------------------------

    @cached_property
    def _rooted(self):
        """BFS order from vertex 0 with parent indices and parent-edge indices."""
        n = self.n_vertices
        parent = np.full(n, -1, dtype=np.intp)
        parent_edge = np.full(n, -1, dtype=np.intp)
        order = [0]
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        q = deque([0])
        while q:
            i = q.popleft()
            for nb in self.adjacency[self.vertices[i]]:
                j = self._vindex[nb]
                if not seen[j]:
                    seen[j] = True
                    parent[j] = i
                    parent_edge[j] = self._eindex[_canon(self.vertices[i], nb)]
                    order.append(j)
                    q.append(j)
        return np.array(order, dtype=np.intp), parent, parent_edge

    @cached_property
    def edge_classes(self) -> tuple[EdgeClass, ...]:
        return tuple(
            EdgeClass.LEAF if min(self.degree(u), self.degree(v)) == 1 else EdgeClass.INTERNAL
            for u, v in self.edges
        )

    @cached_property
    def leaf_edges(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.edge_classes) if c is EdgeClass.LEAF)

    @cached_property
    def internal_edges(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.edge_classes) if c is EdgeClass.INTERNAL)

    def hop_distances(self, source: str) -> dict[str, int]:
        dist = {source: 0}
        q = deque([source])
        while q:
            x = q.popleft()
            for y in self.adjacency[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
        return dist

    def path(self, a: str, b: str) -> list[str]:
        """The unique vertex path from ``a`` to ``b``."""
        self.vertex_index(a), self.vertex_index(b)
        prev = {a: None}
        q = deque([a])
        while q:
            x = q.popleft()
            if x == b:
                break
            for y in self.adjacency[x]:
                if y not in prev:
                    prev[y] = x
                    q.append(y)
        out = [b]
        while out[-1] != a:
            out.append(prev[out[-1]])
        return out[::-1]


_LINE = re.compile(r"^(\S+)\s+(\S+)\s+(\S+)$")


def parse_tree(text: str) -> WeightedTree:
    """Parse an edge-list document: one ``u v weight`` per line, ``#`` comments."""
    triples, lines = [], []
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        m = _LINE.match(body)
        if m is None:
            raise TreeParseError(f"expected '<name> <name> <weight>', got {raw.strip()!r}", ln)
        u, v, ws = m.groups()
        try:
            w = float(ws)
        except ValueError:
            raise TreeParseError(f"weight {ws!r} is not a decimal number", ln) from None
        triples.append((u, v, w))
        lines.append(ln)
    return WeightedTree.from_edges(triples, lines)


def vertex_profile(tree: WeightedTree, v: str) -> VertexProfile:
    """Degree split into leaf neighbours and non-leaf neighbours."""
    nbrs = tree.adjacency.get(v)
    if nbrs is None:
        raise UnknownVertexError(v)
    leaves = sum(1 for x in nbrs if tree.degree(x) == 1)
    return VertexProfile(len(nbrs), leaves, len(nbrs) - leaves)


def classify_edges(tree: WeightedTree) -> tuple[EdgeClass, ...]:
    return tree.edge_classes


def split_at_edge(tree: WeightedTree, e) -> tuple[frozenset[str], frozenset[str]]:
    """Vertex sets of the two components of ``T - e``; the side of ``min(e)`` first."""
    u, v = tree.edges[tree.edge_index(e)]
    side = {u}
    q = deque([u])
    while q:
        x = q.popleft()
        for y in tree.adjacency[x]:
            if y not in side and not (x == u and y == v):
                side.add(y)
                q.append(y)
    return frozenset(side), frozenset(tree.vertices) - side


def caterpillar_classify(tree: WeightedTree) -> CaterpillarReport:
    """Decide whether removing all leaves leaves a path, and return its spine.

    Spine conventions: ``K_2`` uses its edge; a star uses the centre followed
    by its lexicographically smallest leaf.  For non-caterpillars the
    witnesses are internal vertices carrying ``d - 1`` leaves, one per
    internal branch of a vertex with at least three internal neighbours
    (farthest-leaf argument).
    """
    internal = [v for v in tree.vertices if tree.degree(v) >= 2]
    inner_nbrs = {v: [x for x in tree.adjacency[v] if tree.degree(x) >= 2] for v in internal}

    if not internal:
        spine = tree.edges[0]
        return CaterpillarReport(True, tuple(spine), {spine[0]: 0, spine[1]: 0})
    if len(internal) == 1:
        c = internal[0]
        spine = (c, tree.adjacency[c][0])
        return CaterpillarReport(True, spine, {c: tree.degree(c) - 1, spine[1]: 0})

    hub = next((v for v in internal if len(inner_nbrs[v]) >= 3), None)
    if hub is None:
        ends = [v for v in internal if len(inner_nbrs[v]) == 1]
        start = min(ends)
        spine = [start]
        prev = None
        while True:
            nxt = [x for x in inner_nbrs[spine[-1]] if x != prev]
            if not nxt:
                break
            prev = spine[-1]
            spine.append(nxt[0])
        counts = {v: sum(1 for x in tree.adjacency[v] if tree.degree(x) == 1) for v in spine}
        return CaterpillarReport(True, tuple(spine), counts)

    witnesses = []
    for first in inner_nbrs[hub]:
        # farthest leaf of T inside this branch, ties broken by name
        dist = {hub: 0, first: 1}
        q = deque([first])
        best = None
        while q:
            x = q.popleft()
            for y in tree.adjacency[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
                    if tree.degree(y) == 1:
                        key = (-dist[y], y)
                        if best is None or key < best[0]:
                            best = (key, x)
        witnesses.append(best[1])
    return CaterpillarReport(False, (), {}, tuple(sorted(set(witnesses))))


def random_tree(rng: np.random.Generator, n: int, low: float = 0.1, high: float = 10.0) -> WeightedTree:
    """Uniform random labelled tree on ``n >= 2`` vertices (Pruefer decoding),
    with weights log-uniform in ``[low, high]``."""
    if n < 2:
        raise ValueError("need at least two vertices")
    names = [f"v{i:02d}" for i in range(n)]
    if n == 2:
        pairs = [(0, 1)]
    else:
        seq = rng.integers(0, n, size=n - 2)
        deg = np.ones(n, dtype=int)
        for s in seq:
            deg[s] += 1
        pairs = []
        for s in seq:
            leaf = int(np.flatnonzero(deg == 1)[0])
            pairs.append((leaf, int(s)))
            deg[leaf] -= 1
            deg[s] -= 1
        a, b = np.flatnonzero(deg == 1)
        pairs.append((int(a), int(b)))
    ws = np.exp(rng.uniform(np.log(low), np.log(high), size=n - 1))
    return WeightedTree.from_edges([(names[a], names[b], w) for (a, b), w in zip(pairs, ws)])
