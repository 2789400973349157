"""Continuous-time Ricci flow on a weighted tree.

Unnormalized flow:   w_e' = -kappa_e w_e
Normalized flow:     w_e' = -kappa_e w_e + w_e * sum_h kappa_h w_h   (sum w = 1)

Both are integrated by an embedded Dormand-Prince 5(4) pair (default) or
classical RK4 with a fixed step.  Steps land exactly on the recording grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .curvature import CurvatureVector, MetricError, check_weights, kappa_all, kappa_values
from .tree_model import WeightedTree


class Variant(enum.Enum):
    UNNORMALIZED = "unnormalized"
    NORMALIZED = "normalized"


class Termination(enum.Enum):
    REACHED_T_END = "reached_t_end"
    WEIGHT_FLOOR = "weight_floor"
    STEP_UNDERFLOW = "step_underflow"


class NotNormalized(MetricError):
    pass


class NonFiniteState(ArithmeticError):
    pass


@dataclass(frozen=True)
class FixedRK4:
    dt: float = 1e-3

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class Adaptive:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    dt_min: float = 1e-12
    dt_max: float = 1.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")


@dataclass(frozen=True)
class FlowSpec:
    """Integration settings.

    ``log_space`` integrates log-weights instead of weights, which keeps tiny
    leaf weights accurate in relative terms; the default integrates weights
    directly and rejects any trial step producing a nonpositive weight.
    ``stop_on_floor`` ends the run at the first weight falling below
    ``weight_floor``; otherwise such a weight is frozen at the floor.
    """

    variant: Variant = Variant.UNNORMALIZED
    t_end: float = 40.0
    integrator: FixedRK4 | Adaptive = field(default_factory=Adaptive)
    record_every: float = 0.1
    weight_floor: float = 1e-14
    log_space: bool = False
    stop_on_floor: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.record_every > 0:
            raise ValueError("record_every must be positive")
        if not self.weight_floor > 0:
            raise ValueError("weight_floor must be positive")


# -- right-hand sides ----------------------------------------------------


def rhs_unnormalized(tree: WeightedTree, w) -> np.ndarray:
    w = check_weights(w, tree.n_edges)
    return -kappa_values(tree, w) * w


def rhs_normalized(tree: WeightedTree, w) -> np.ndarray:
    w = check_weights(w, tree.n_edges)
    if abs(math.fsum(w) - 1.0) > 1e-9:
        raise NotNormalized(f"weights sum to {math.fsum(w)!r}, expected 1")
    kw = kappa_values(tree, w) * w
    return -kw + w * math.fsum(kw)


def _rhs(tree, variant, log_space):
    normalized = variant is Variant.NORMALIZED
    if log_space:
        def f(y):
            w = np.exp(y)
            k = kappa_values(tree, w)
            return -k + math.fsum(k * w) / math.fsum(w) if normalized else -k
    else:
        def f(w):
            kw = kappa_values(tree, w) * w
            return -kw + w * (math.fsum(kw) / math.fsum(w)) if normalized else -kw
    return f


# -- Dormand-Prince 5(4) tableau ----------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dp_step(f, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        ks.append(f(yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err, ks[-1]


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


# -- trajectories ------------------------------------------------------


@dataclass(frozen=True)
class MonitorRecord:
    """Conservation/decay diagnostics for one sample.

    Fields that only make sense for one flow variant are ``None`` in the other.
    """

    t: float
    gauss_bonnet_residual: float
    product_log_residual: float | None = None
    total_weight_residual: float | None = None
    leaf_pair_residuals: dict[tuple[int, int], float] | None = None
    internal_sum: float | None = None
    internal_product: float | None = None


@dataclass(frozen=True)
class Sample:
    t: float
    weights: np.ndarray
    curvature: CurvatureVector
    monitor: MonitorRecord


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded solution of one flow run.

    ``weights[k]`` is the metric at ``times[k]``.  ``floor_hits`` maps edge
    index to the time its weight was clamped to the floor.
    """

    tree: WeightedTree
    variant: Variant
    times: np.ndarray
    weights: np.ndarray
    termination: Termination = Termination.REACHED_T_END
    floor_hits: dict[int, float] = field(default_factory=dict)
    n_accepted: int = 0
    n_rejected: int = 0

    def __len__(self):
        return len(self.times)

    @cached_property
    def kappas(self) -> np.ndarray:
        return np.array([kappa_values(self.tree, w) for w in self.weights])

    @property
    def final_weights(self) -> np.ndarray:
        return self.weights[-1]

    def sample(self, k: int) -> Sample:
        return Sample(
            float(self.times[k]), self.weights[k], kappa_all(self.tree, self.weights[k]), monitor(self, k)
        )

    def monitors(self) -> list[MonitorRecord]:
        return [monitor(self, k) for k in range(len(self))]


def same_vertex_leaf_pairs(tree: WeightedTree) -> list[tuple[int, int]]:
    by_vertex: dict[str, list[int]] = {}
    for i in tree.leaf_edges:
        u, v = tree.edges[i]
        hub = u if tree.degree(u) > 1 else v
        if tree.degree(hub) > 1:
            by_vertex.setdefault(hub, []).append(i)
    return [p for hub in sorted(by_vertex) for p in combinations(by_vertex[hub], 2)]


def monitor(traj: Trajectory, k: int) -> MonitorRecord:
    tree = traj.tree
    t = float(traj.times[k])
    w = traj.weights[k]
    gb = abs(math.fsum(traj.kappas[k]) - 2.0)
    if traj.variant is Variant.NORMALIZED:
        return MonitorRecord(t, gb, total_weight_residual=abs(math.fsum(w) - 1.0))
    w0 = traj.weights[0]
    prod = abs(math.fsum(np.log(w)) - math.fsum(np.log(w0)) + 2.0 * t)
    pairs = {
        (a, b): abs((w[a] - w[b]) - (w0[a] - w0[b]) * math.exp(-t)) for a, b in same_vertex_leaf_pairs(tree)
    }
    internal = w[list(tree.internal_edges)]
    return MonitorRecord(
        t,
        gb,
        product_log_residual=prod,
        leaf_pair_residuals=pairs,
        internal_sum=math.fsum(internal),
        internal_product=float(np.prod(internal)),
    )


def integrate(tree: WeightedTree, w0=None, spec: FlowSpec | None = None) -> Trajectory:
    """Integrate the flow from ``w0`` (defaults to the tree's initial metric)."""
    spec = spec or FlowSpec()
    w0 = check_weights(tree.initial_weights if w0 is None else w0, tree.n_edges).copy()
    normalized = spec.variant is Variant.NORMALIZED
    if normalized and abs(math.fsum(w0) - 1.0) > 1e-9:
        raise NotNormalized(f"normalized flow needs sum w(0) = 1, got {math.fsum(w0)!r}")

    f_raw = _rhs(tree, spec.variant, spec.log_space)
    frozen = np.zeros(tree.n_edges, dtype=bool)

    def f(y):
        d = f_raw(y)
        if frozen.any():
            d[frozen] = 0.0
        return d

    to_state = np.log if spec.log_space else (lambda w: w)
    to_weights = np.exp if spec.log_space else (lambda y: y)

    def project(y):
        if not normalized:
            return y
        if spec.log_space:
            return y - math.log(math.fsum(np.exp(y)))
        return y / math.fsum(y)

    times = [0.0]
    rows = [w0.copy()]
    floor_hits: dict[int, float] = {}
    termination = Termination.REACHED_T_END
    n_acc = n_rej = 0

    n_records = int(math.floor(spec.t_end / spec.record_every + 1e-9))
    grid = [k * spec.record_every for k in range(1, n_records + 1)]
    if not grid or spec.t_end - grid[-1] > 1e-12 * spec.t_end:
        grid.append(spec.t_end)

    y = to_state(w0)
    t = 0.0
    adaptive = isinstance(spec.integrator, Adaptive)
    h = min(0.01, spec.integrator.dt_max) if adaptive else spec.integrator.dt
    k1 = f(y) if adaptive else None

    for target in grid:
        stop = False
        while t < target:
            h_try = min(h, target - t)
            if adaptive:
                y_new, err, k_last = _dp_step(f, y, h_try, k1)
            else:
                y_new, err, k_last = _rk4_step(f, y, h_try), None, None
            if not np.all(np.isfinite(y_new)):
                raise NonFiniteState(f"non-finite state at t={t!r} with step {h_try!r}")
            if not spec.log_space and np.any(y_new <= 0):
                n_rej += 1
                h = h_try / 2
                if adaptive and h < spec.integrator.dt_min or not adaptive and h < 1e-15:
                    termination = Termination.STEP_UNDERFLOW
                    stop = True
                    break
                continue
            if adaptive:
                ig = spec.integrator
                scale = ig.abs_tol + ig.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
                en = float(np.max(np.abs(err) / scale))
                if en > 1.0:
                    n_rej += 1
                    h = h_try * max(0.2, 0.9 * en ** -0.2)
                    if h < ig.dt_min:
                        termination = Termination.STEP_UNDERFLOW
                        stop = True
                        break
                    continue
                grow = 5.0 if en == 0 else min(5.0, 0.9 * en ** -0.2)
                h_next = min(ig.dt_max, h_try * grow)
                if h_try < h:  # clipped to land on the grid
                    h_next = max(h_next, h)
                h = h_next
            n_acc += 1
            t = target if target - (t + h_try) <= 1e-12 * max(1.0, target) else t + h_try
            y = project(y_new)
            w = to_weights(y)
            low = (w < spec.weight_floor) & ~frozen
            if low.any():
                for i in np.flatnonzero(low):
                    floor_hits[int(i)] = t
                if spec.stop_on_floor:
                    termination = Termination.WEIGHT_FLOOR
                    stop = True
                    times.append(t)
                    rows.append(np.maximum(w, spec.weight_floor))
                    break
                frozen |= low
                w = np.where(low, spec.weight_floor, w)
                y = to_state(w)
            if adaptive:
                k1 = f(y) if (low.any() or normalized) else k_last
        if stop:
            break
        times.append(t)
        rows.append(to_weights(y).copy())

    return Trajectory(
        tree,
        spec.variant,
        np.array(times),
        np.array(rows),
        termination,
        floor_hits,
        n_acc,
        n_rej,
    )


def normalized_from_unnormalized(traj: Trajectory) -> Trajectory:
    """Rescale every sample to total weight 1 (same time grid)."""
    if traj.variant is not Variant.UNNORMALIZED:
        raise ValueError("expected an unnormalized trajectory")
    w = traj.weights / traj.weights.sum(axis=1, keepdims=True)
    return Trajectory(
        traj.tree,
        Variant.NORMALIZED,
        traj.times.copy(),
        w,
        traj.termination,
        dict(traj.floor_hits),
        traj.n_accepted,
        traj.n_rejected,
    )
