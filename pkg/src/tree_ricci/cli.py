"""Command-line entry point ``trf``.

Exit codes: 0 success, 1 bad input or failed integration, 2 failed
verification.  Set ``TRF_NO_COLOR`` to suppress ANSI colours.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .corpus import BUILTIN_NAMES, SIMPLE_PANEL, UnknownExample, builtin_tree
from .csvio import ensure_dir, write_dat, write_monitors_csv, write_trajectory_csv
from .curvature import MetricError, kappa_all, kappa_values
from .flow import Adaptive, FixedRK4, FlowSpec, NonFiniteState, Termination, Variant, integrate
from .transport import (
    NonlinearAlphaProfile,
    alpha_curvature,
    kantorovich_potential,
    lly_oracle,
    walk_measure,
    wasserstein_tree,
)
from .tree_model import TreeError, WeightedTree, parse_tree, random_tree

REPRODUCIBLE = ("simple", "t1", "t2", "t3")
REPRODUCE_METRIC = {"simple": "unit", "t1": "skewed", "t2": "unit", "t3": "skewed"}


class InputError(Exception):
    pass


def _color(code: str, text: str) -> str:
    if os.environ.get("TRF_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def load_tree(args) -> WeightedTree:
    if args.tree is not None:
        try:
            text = Path(args.tree).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {args.tree}: {exc.strerror}") from None
        if args.metric != "unit":
            raise InputError("--metric applies to builtin trees only")
        return parse_tree(text)
    return builtin_tree(args.builtin, args.metric)


def flow_spec(args, variant: str | None = None) -> FlowSpec:
    if args.dt is not None:
        integrator = FixedRK4(args.dt)
    else:
        integrator = Adaptive(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    return FlowSpec(
        variant=Variant(variant or args.flow),
        t_end=args.t_end,
        integrator=integrator,
        record_every=args.record_every,
    )


def initial_metric(tree: WeightedTree, variant: Variant) -> np.ndarray:
    w = np.array(tree.initial_weights)
    return w / math.fsum(w) if variant is Variant.NORMALIZED else w


# -- commands ------------------------------------------------------------


def cmd_curvature(args) -> int:
    tree = load_tree(args)
    cv = kappa_all(tree)
    print(f"{'edge':<16} {'weight':>12} {'kappa':>20} {'kappa_u->v':>20} {'kappa_v->u':>20}")
    for i, name in enumerate(tree.edge_name(j) for j in range(tree.n_edges)):
        ku, kv = cv.directional[i]
        print(f"{name:<16} {tree.initial_weights[i]:>12.6g} {cv.kappa[i]:>20.15g} {ku:>20.15g} {kv:>20.15g}")
    print()
    print(f"{'vertex':<16} {'degree':>6} {'D':>20}")
    for v, d, D in zip(tree.vertices, tree.degrees, cv.weighted_degree):
        print(f"{v:<16} {int(d):>6} {D:>20.15g}")
    print(f"sum_kappa = {cv.total!r}")
    return 0


def _run(tree: WeightedTree, spec: FlowSpec):
    traj = integrate(tree, initial_metric(tree, spec.variant), spec)
    if traj.termination is Termination.STEP_UNDERFLOW:
        raise InputError(f"integration stopped at t={float(traj.times[-1])!r}: step size underflow")
    return traj


def cmd_simulate(args) -> int:
    tree = load_tree(args)
    spec = flow_spec(args)
    traj = _run(tree, spec)
    out = ensure_dir(args.out)
    write_trajectory_csv(traj, out / "trajectory.csv")
    write_monitors_csv(traj, out / "monitors.csv")
    print(f"flow: {spec.variant.value}")
    print(f"t_end: {float(traj.times[-1])!r}")
    print(f"termination: {traj.termination.value}")
    print(f"steps: accepted={traj.n_accepted} rejected={traj.n_rejected}")
    for i, t in sorted(traj.floor_hits.items()):
        print(f"floor_hit: {tree.edge_name(i)} at t={t!r}")
    print(f"wrote: {out / 'trajectory.csv'}")
    print(f"wrote: {out / 'monitors.csv'}")
    return 0


def cmd_classify(args) -> int:
    tree = load_tree(args)
    print(analysis.prediction_text(tree, analysis.predict_limits(tree)), end="")
    return 0


# -- verify --------------------------------------------------------------


@dataclass
class Property:
    name: str
    cases: int = 0
    failures: list[str] = field(default_factory=list)

    def record(self, ok: bool, where: str, detail: str):
        self.cases += 1
        if not ok:
            self.failures.append(f"{where}: {detail}")


def _closed_form(tree, w, corrupt: bool):
    k = kappa_values(tree, w)
    return k + 1e-6 if corrupt else k


def _random_measure(rng, n):
    p = rng.random(n) * (rng.random(n) < 0.6)
    if p.sum() == 0:
        p[rng.integers(n)] = 1.0
    return p / p.sum()


def verify_tree(tree: WeightedTree, w, rng, props: dict[str, Property], where: str, corrupt: bool, flow: bool):
    k = _closed_form(tree, w, corrupt)
    gb = abs(math.fsum(k) - 2.0)
    props["gauss_bonnet"].record(gb <= 1e-10, where, f"|sum kappa - 2| = {gb:.3g}")

    for i in range(tree.n_edges):
        try:
            ref = lly_oracle(tree, w, i)
        except NonlinearAlphaProfile as exc:
            props["oracle_equivalence"].record(False, where, str(exc))
            continue
        err = abs(ref - k[i])
        props["oracle_equivalence"].record(err <= 1e-9, where, f"edge {tree.edge_name(i)} differs by {err:.3g}")

    n = tree.n_vertices
    a, b, c = (_random_measure(rng, n) for _ in range(3))
    dab, dba = wasserstein_tree(tree, w, a, b), wasserstein_tree(tree, w, b, a)
    dac, dcb = wasserstein_tree(tree, w, a, c), wasserstein_tree(tree, w, c, b)
    ok = abs(dab - dba) <= 1e-10 and dab <= dac + dcb + 1e-10 and wasserstein_tree(tree, w, a, a) <= 1e-10
    props["w1_metric_axioms"].record(ok, where, f"W(a,b)={dab!r} W(b,a)={dba!r} via c={dac + dcb!r}")

    i = int(rng.integers(tree.n_edges))
    alpha = float(rng.uniform(0.5, 1.0))
    u, v = tree.edges[i]
    mu, nu = walk_measure(tree, w, u, alpha), walk_measure(tree, w, v, alpha)
    dual = kantorovich_potential(tree, w, i).dual_value(mu, nu)
    primal = wasserstein_tree(tree, w, mu, nu)
    props["duality_equality"].record(
        abs(dual - primal) <= 1e-10, where, f"edge {tree.edge_name(i)} alpha={alpha!r}: {dual!r} vs {primal!r}"
    )
    alpha = float(rng.uniform(0.5, 0.99))
    kal = alpha_curvature(tree, w, i, alpha) / (1 - alpha)
    props["alpha_linearity"].record(
        abs(kal - k[i]) <= 1e-9 * max(1.0, abs(k[i])), where, f"edge {tree.edge_name(i)} alpha={alpha!r}: {kal!r}"
    )

    if flow:
        t_end = 2.0
        traj = integrate(tree, w, FlowSpec(t_end=t_end, record_every=t_end))
        res = abs(math.fsum(np.log(traj.weights[-1])) - math.fsum(np.log(w)) + 2 * t_end)
        props["product_law"].record(res <= 1e-6, where, f"log-product residual {res:.3g}")


def run_verify(trees: dict[str, WeightedTree], seed: int, count: int, corrupt: bool = False) -> list[Property]:
    names = ["gauss_bonnet", "oracle_equivalence", "w1_metric_axioms", "duality_equality", "alpha_linearity", "product_law"]
    props = {n: Property(n) for n in names}
    for j, (name, tree) in enumerate(trees.items()):
        rng = np.random.default_rng([seed, 0, j])
        verify_tree(tree, np.array(tree.initial_weights), rng, props, f"tree {name}", corrupt, flow=True)
    for case in range(count):
        rng = np.random.default_rng([seed, 1, case])
        tree = random_tree(rng, int(rng.integers(2, 13)))
        where = f"random case {case} (seed={seed})"
        verify_tree(tree, np.array(tree.initial_weights), rng, props, where, corrupt, flow=case % 10 == 0)
    return list(props.values())


def cmd_verify(args) -> int:
    if args.tree is not None or args.builtin is not None:
        trees = {args.tree or args.builtin: load_tree(args)}
    else:
        trees = {name: builtin_tree(name) for name in BUILTIN_NAMES}
    props = run_verify(trees, args.seed, args.count, args.corrupt_curvature)
    failed = False
    for p in props:
        if p.failures:
            failed = True
            print(f"{_color('31', 'FAIL')} {p.name}: {len(p.failures)} of {p.cases} cases")
            for f in p.failures[:5]:
                print(f"  {f}")
        else:
            print(f"{_color('32', 'PASS')} {p.name}: {p.cases} cases")
    print(f"seed: {args.seed}")
    return 2 if failed else 0


# -- reproduce -------------------------------------------------------------

_GNUPLOT = """\
set terminal pngcairo size 900,600
set xlabel "t"
set key outside right
set output "{name}_weights.png"
set ylabel "unnormalized weight"
plot for [i=2:{ncol}] "weights.dat" using 1:i with lines title columnheader(i)
set output "{name}_curvature.png"
set ylabel "curvature"
plot for [i=2:{ncol}] "curvature.dat" using 1:i with lines title columnheader(i)
"""


def cmd_reproduce(args) -> int:
    name = args.name
    if name not in REPRODUCIBLE:
        raise UnknownExample(f"unknown example {name!r}; choose from {', '.join(REPRODUCIBLE)}")
    metric = REPRODUCE_METRIC[name]
    tree = builtin_tree(name, metric)
    spec = flow_spec(args, "unnormalized")
    traj = _run(tree, spec)
    out = ensure_dir(args.out)
    write_trajectory_csv(traj, out / "trajectory.csv")
    write_monitors_csv(traj, out / "monitors.csv")
    names = [tree.edge_name(i) for i in range(tree.n_edges)]
    note = f"tree {name}, initial metric '{metric}': " + ", ".join(
        f"{n}={float(w)!r}" for n, w in zip(names, tree.initial_weights)
    )
    write_dat(out / "weights.dat", {"t": traj.times, **dict(zip(names, traj.weights.T))}, note)
    write_dat(out / "curvature.dat", {"t": traj.times, **dict(zip(names, traj.kappas.T))}, note)
    script = _GNUPLOT.format(name=name, ncol=tree.n_edges + 1)
    written = ["trajectory.csv", "monitors.csv", "weights.dat", "curvature.dat"]
    if name == "simple":
        cols = {"t": traj.times}
        i = tree.edge_index(("u", "v"))
        for m in SIMPLE_PANEL:
            run = _run(builtin_tree("simple", m), spec)
            cols[f"w_uv(0)={float(builtin_tree('simple', m).initial_weights[i])!r}"] = run.weights[:, i]
        write_dat(
            out / "uv_panel.dat",
            cols,
            "weight of u-v for three initial values of w_uv (chosen here); other weights 1",
        )
        script += (
            'set output "simple_uv_panel.png"\nset ylabel "w_uv"\n'
            'plot for [i=2:4] "uv_panel.dat" using 1:i with lines title columnheader(i)\n'
        )
        written.append("uv_panel.dat")
    (out / "plot.gp").write_text(script)
    written.append("plot.gp")
    for f in written:
        print(f"wrote: {out / f}")
    # observations only; whether a rising internal weight is unbounded is left open
    slopes = analysis.detect_limits(traj).log_slope
    for i in tree.internal_edges:
        trend = "rising" if slopes[i] > 0 else "not rising"
        print(f"observed {names[i]}: w({float(traj.times[-1]):g}) = {float(traj.weights[-1, i]):.6g}, "
              f"tail log-slope {float(slopes[i]):.3g} ({trend})")
    return 0


# -- parser ----------------------------------------------------------------


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def _add_source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--tree", help="edge-list file, one 'u v weight' per line")
    g.add_argument("--builtin", choices=BUILTIN_NAMES, help="built-in example tree")
    p.add_argument("--metric", default="unit", help="named initial metric of a builtin tree (default: unit)")


def _add_flow(p, t_end=40.0):
    p.add_argument("--t-end", type=_positive, default=t_end)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dt", type=_positive, help="fixed RK4 step")
    g.add_argument("--adaptive", action="store_true", help="adaptive Dormand-Prince 5(4) (default)")
    p.add_argument("--rel-tol", type=_positive, default=1e-8)
    p.add_argument("--abs-tol", type=_positive, default=1e-12)
    p.add_argument("--record-every", type=_positive, default=0.1)
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trf", description="Ricci flow on weighted trees.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", help="print edge curvatures")
    _add_source(p)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("simulate", help="integrate the flow and write CSV files")
    _add_source(p)
    p.add_argument("--flow", choices=[v.value for v in Variant], default="unnormalized")
    _add_flow(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="caterpillar verdict and predicted limits")
    _add_source(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="randomized invariant checks")
    _add_source(p, required=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--corrupt-curvature", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reproduce", help="data files for the example figures")
    p.add_argument("name", help=f"one of {', '.join(REPRODUCIBLE)}")
    _add_flow(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TreeError, MetricError, InputError, NonFiniteState, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except UnknownExample as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
