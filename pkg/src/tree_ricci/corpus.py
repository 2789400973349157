"""Built-in example trees and named initial metrics."""

from __future__ import annotations

from .tree_model import WeightedTree


class UnknownExample(KeyError):
    pass


_T1 = [("x1", "x2"), ("u1", "x2"), ("x2", "x3"), ("x4", "x3"), ("x3", "x5"), ("u2", "x5"), ("u3", "x5")]


def _caterpillar():
    counts = [3, 2, 3, 2, 0, 3]
    edges = [(f"v{i}", f"v{i + 1}") for i in range(1, len(counts))]
    for i, c in enumerate(counts, start=1):
        edges += [(f"v{i}", f"l{i}{j}") for j in range(1, c + 1)]
    return edges


def _spider(leaves: int, arms: int):
    edges = [("c", f"l{j}") for j in range(1, leaves + 1)]
    for j in range(1, arms + 1):
        edges += [("c", f"a{j}"), (f"a{j}", f"b{j}")]
    return edges


_TOPOLOGIES = {
    "simple": [("x", "u"), ("y", "u"), ("u", "v"), ("v", "z")],
    "k2": [("a", "b")],
    "path5": [(f"p{i}", f"p{i + 1}") for i in range(1, 5)],
    "star4": [("c", f"l{j}") for j in range(1, 5)],
    "t1": _T1,
    "t2": _T1 + [("u4", "x4")],
    "t3": _T1 + [("x6", "x3")],
    "caterpillar": _caterpillar(),
    "noncaterpillar": [(f"v{i}", f"v{i + 1}") for i in range(1, 5)]
    + [(f"v{i}", f"l{i}") for i in range(1, 6)]
    + [("v3", "u"), ("u", "l6")],
    "spider": _spider(1, 3),
    "spider2": _spider(2, 3),
}

BUILTIN_NAMES = tuple(sorted(_TOPOLOGIES))

# edge overrides on top of unit weights
_METRICS: dict[str, dict[str, dict[tuple[str, str], float]]] = {
    "simple": {
        "uv0.5": {("u", "v"): 0.5},
        "uv2": {("u", "v"): 2.0},
        "asym": {("u", "x"): 1.2},
    },
    "t1": {"skewed": {("x3", "x4"): 0.01}},
    "t3": {"skewed": {("x3", "x4"): 0.01, ("x3", "x6"): 0.02}},
}

SIMPLE_PANEL = ("uv0.5", "unit", "uv2")


def metric_names(name: str) -> tuple[str, ...]:
    if name not in _TOPOLOGIES:
        raise UnknownExample(name)
    return ("unit",) + tuple(sorted(_METRICS.get(name, {})))


def builtin_tree(name: str, metric: str = "unit") -> WeightedTree:
    """A named example tree with one of its named initial metrics.

    Every metric starts from unit weights; named metrics override a few
    edges (see :func:`metric_names`).
    """
    try:
        edges = _TOPOLOGIES[name]
    except KeyError:
        raise UnknownExample(f"unknown builtin tree {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    if metric == "unit":
        over = {}
    else:
        try:
            over = _METRICS[name][metric]
        except KeyError:
            raise UnknownExample(
                f"unknown metric {metric!r} for {name!r}; choose from {', '.join(metric_names(name))}"
            ) from None
    over = {frozenset(e): w for e, w in over.items()}
    return WeightedTree.from_edges([(u, v, over.get(frozenset((u, v)), 1.0)) for u, v in edges])
