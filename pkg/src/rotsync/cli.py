"""Command-line interface: ``rotsync {synth,solve,eval,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from rotsync.bench import SOLVERS, BenchSpec, bench_run, parse_seeds, parse_values, rows_to_csv, run_solver
from rotsync.exceptions import RotsyncError
from rotsync.io import read_graph, read_rotations, write_graph, write_rotations
from rotsync.metrics import error_report
from rotsync.synth import GENERATORS, generate

log = logging.getLogger("rotsync")


def build_parser():
    parser = argparse.ArgumentParser(prog="rotsync", description="Robust rotation synchronization.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic instance")
    p.add_argument("--model", choices=sorted(GENERATORS), default="uniform")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--graph", default="graph.txt", help="output graph file")
    p.add_argument("--truth", default="truth.txt", help="output ground-truth rotation file")

    p = sub.add_parser("solve", help="estimate absolute rotations of a graph file")
    p.add_argument("--graph", default="graph.txt")
    p.add_argument("--solver", choices=SOLVERS, default="mpls")
    p.add_argument("--seed", type=int, default=0, help="seed for cycle sampling")
    p.add_argument("--out", default="rotations.txt")
    p.add_argument("--truth", help="optional ground truth; enables the error report")
    p.add_argument("--report", help="write a JSON report here")
    p.add_argument("--runtime", action="store_true", help="include wall-clock runtime in the report")

    p = sub.add_parser("eval", help="compare an estimate with ground truth")
    p.add_argument("--estimate", default="rotations.txt")
    p.add_argument("--truth", default="truth.txt")
    p.add_argument("--json", action="store_true", help="print the full report as JSON")

    p = sub.add_parser("bench", help="sweep a synthetic model and write CSV")
    p.add_argument("--model", choices=sorted(GENERATORS), default="uniform")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--q", default="0.0:0.1:0.8", help="start:step:stop or comma list")
    p.add_argument("--sigma", default="0,0.1,0.5,1")
    p.add_argument("--seeds", default="10", help="count N (seeds 0..N-1) or comma list")
    p.add_argument("--solvers", default=",".join(SOLVERS))
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--runtime", action="store_true", help="record wall-clock runtime (output no longer reproducible)")
    return parser


def _synth(args):
    inst = generate(args.model, args.n, args.p, args.q, args.sigma, args.seed)
    write_graph(args.graph, inst.graph)
    write_rotations(args.truth, inst.ground_truth)
    log.info("wrote %s (m=%d, %d bad) and %s", args.graph, inst.graph.m, int(inst.bad.sum()), args.truth)
    return 0


def _solve(args):
    graph = read_graph(args.graph)
    res = run_solver(args.solver, graph, args.seed)
    write_rotations(args.out, res.rotations)
    report = {
        "solver": args.solver,
        "n": graph.n,
        "m": graph.m,
        "init_iters": res.init_iterations,
        "main_iters": res.iterations,
        "runtime_s": res.runtime_s if args.runtime else None,
    }
    if args.truth:
        rep = error_report(res.rotations, read_rotations(args.truth))
        report.update(mean_deg=rep.mean_deg, median_deg=rep.median_deg)
        print(f"mean {rep.mean_deg:.6g} deg, median {rep.median_deg:.6g} deg")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _eval(args):
    est = read_rotations(args.estimate)
    gt = read_rotations(args.truth)
    if len(est) != len(gt):
        raise RotsyncError(f"estimate has {len(est)} rotations, truth has {len(gt)}")
    rep = error_report(est, gt)
    if args.json:
        print(json.dumps(rep.as_dict(), indent=2, sort_keys=True))
    else:
        print(f"mean {rep.mean_deg:.6g} deg, median {rep.median_deg:.6g} deg")
    return 0


def _bench(args):
    spec = BenchSpec(
        model=args.model,
        n=args.n,
        p=args.p,
        qs=parse_values(args.q),
        sigmas=parse_values(args.sigma),
        seeds=parse_seeds(args.seeds),
        solvers=tuple(s.strip() for s in args.solvers.split(",") if s.strip()),
        out=args.out,
        record_runtime=args.runtime,
        jobs=args.jobs,
    )
    rows, failed = bench_run(spec)
    text = rows_to_csv(rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if failed:
        log.error("%d solver runs failed", failed)
        return 1
    return 0


COMMANDS = {"synth": _synth, "solve": _solve, "eval": _eval, "bench": _bench}


def main(argv=None):
    """Run the CLI; returns 0 on success, 2 on usage errors, 1 on failures."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        # bad flag values surface here rather than in argparse
        if isinstance(exc, RotsyncError):
            print(f"rotsync: error: {exc}", file=sys.stderr)
            return 1
        print(f"rotsync: usage error: {exc}", file=sys.stderr)
        return 2
    except (RotsyncError, OSError, RuntimeError) as exc:
        print(f"rotsync: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
