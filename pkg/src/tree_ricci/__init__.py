"""Ricci flow on finite weighted trees under Lin-Lu-Yau curvature."""

from .analysis import (
    check_caterpillar_theorem,
    detect_limits,
    maximal_paths,
    balance_system,
    predict_limits,
    verify_prop_bounds,
)
from .corpus import builtin_tree
from .curvature import RECIPROCAL, Power, kappa_all, kappa_edge, kappa_general
from .flow import Adaptive, FixedRK4, FlowSpec, Variant, integrate, normalized_from_unnormalized
from .transport import lly_oracle, wasserstein_tree
from .tree_model import WeightedTree, caterpillar_classify, parse_tree

__all__ = [
    "Adaptive",
    "FixedRK4",
    "FlowSpec",
    "Power",
    "RECIPROCAL",
    "Variant",
    "WeightedTree",
    "balance_system",
    "builtin_tree",
    "caterpillar_classify",
    "check_caterpillar_theorem",
    "detect_limits",
    "integrate",
    "kappa_all",
    "kappa_edge",
    "kappa_general",
    "lly_oracle",
    "maximal_paths",
    "normalized_from_unnormalized",
    "parse_tree",
    "predict_limits",
    "verify_prop_bounds",
    "wasserstein_tree",
]
