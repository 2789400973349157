"""Trajectory and monitor CSV files, plus gnuplot data panels.

Floats are written with ``repr``, the shortest decimal that round-trips,
so reading a file back reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .flow import Trajectory


@dataclass(frozen=True, eq=False)
class TrajectoryTable:
    edge_names: tuple[str, ...]
    times: np.ndarray
    weights: np.ndarray
    kappas: np.ndarray


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def trajectory_header(traj: Trajectory) -> list[str]:
    names = [traj.tree.edge_name(i) for i in range(traj.tree.n_edges)]
    return ["t"] + [f"w:{n}" for n in names] + [f"kappa:{n}" for n in names]


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(trajectory_header(traj))
        for t, w, k in zip(traj.times, traj.weights, traj.kappas):
            out.writerow([_fmt(t)] + [_fmt(x) for x in w] + [_fmt(x) for x in k])


def read_trajectory_csv(path) -> TrajectoryTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "t" or (len(header) - 1) % 2:
        raise ValueError(f"{path}: not a trajectory file")
    m = (len(header) - 1) // 2
    names = tuple(h.split(":", 1)[1] for h in header[1 : m + 1])
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), 2 * m + 1)
    return TrajectoryTable(names, data[:, 0], data[:, 1 : m + 1], data[:, m + 1 :])


MONITOR_COLUMNS = (
    "t",
    "gauss_bonnet_residual",
    "product_log_residual",
    "total_weight_residual",
    "leaf_pair_max_residual",
    "internal_sum",
    "internal_product",
)


def write_monitors_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(MONITOR_COLUMNS)
        for m in traj.monitors():
            pairs = m.leaf_pair_residuals
            pair_max = None if pairs is None else max(pairs.values(), default=0.0)
            out.writerow(
                [
                    _fmt(m.t),
                    _fmt(m.gauss_bonnet_residual),
                    _fmt(m.product_log_residual),
                    _fmt(m.total_weight_residual),
                    _fmt(pair_max),
                    _fmt(m.internal_sum),
                    _fmt(m.internal_product),
                ]
            )


def write_dat(path, columns: dict[str, np.ndarray], comment: str = "") -> None:
    """Whitespace-separated columns with a ``#`` header, as gnuplot reads them."""
    keys = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in keys]
    with open(path, "w") as fh:
        for line in comment.splitlines():
            fh.write(f"# {line}\n")
        fh.write("# " + " ".join(keys) + "\n")
        for row in zip(*cols):
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
