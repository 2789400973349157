import numpy as np
import pytest

from tree_ricci.corpus import builtin_tree
from tree_ricci.flow import Adaptive, FlowSpec, integrate
from tree_ricci.tree_model import WeightedTree

import oracles

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def simple():
    return builtin_tree("simple")


@pytest.fixture(scope="session")
def corpus_runs():
    """Unit-weight unnormalized runs to t = 40 on every tree with at most 9
    vertices plus the three named example trees.

    The floor sits far below e^{-80}, the fastest decay possible by t = 40,
    so no edge is ever frozen.  The absolute tolerance is negligible so the
    error control stays relative on every edge, however small."""
    spec = FlowSpec(t_end=40.0, integrator=Adaptive(rel_tol=1e-10, abs_tol=1e-300), weight_floor=1e-300)
    runs = {}
    for edges in oracles.all_trees(9):
        tree = WeightedTree.from_edges([(a, b, 1.0) for a, b in edges])
        runs[tree.to_text()] = (tree, integrate(tree, None, spec))
    for name in ("t1", "t2", "t3"):
        tree = builtin_tree(name)
        runs[name] = (tree, integrate(tree, None, spec))
    return runs
