"""Benchmark sweeps over synthetic corruption models, written as CSV."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from rotsync.irls import IrlsConfig, irls_solve
from rotsync.metrics import error_report
from rotsync.mpls import MplsConfig, cemp_mst_solve, mpls_solve
from rotsync.synth import GENERATORS, generate

log = logging.getLogger(__name__)

COLUMNS = (
    "solver",
    "model",
    "n",
    "p",
    "q",
    "sigma",
    "seed",
    "mean_err_deg",
    "median_err_deg",
    "init_iters",
    "main_iters",
    "runtime_s",
)
SOLVERS = ("mpls", "irls-gm", "irls-l12", "cemp-mst")


def run_solver(name, graph, seed=0):
    """Dispatch to a solver by its command-line id."""
    if name == "mpls":
        return mpls_solve(graph, MplsConfig(seed=seed))
    if name == "cemp-mst":
        return cemp_mst_solve(graph, MplsConfig(seed=seed))
    if name == "irls-gm":
        return irls_solve(graph, IrlsConfig(loss="gm"))
    if name == "irls-l12":
        return irls_solve(graph, IrlsConfig(loss="l12"))
    raise ValueError(f"unknown solver {name!r}; expected one of {SOLVERS}")


@dataclass(frozen=True)
class BenchSpec:
    model: str
    n: int
    p: float
    qs: tuple
    sigmas: tuple
    seeds: tuple
    solvers: tuple
    out: str | None = None
    record_runtime: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.model not in GENERATORS:
            raise ValueError(f"unknown model {self.model!r}")
        for name in ("qs", "sigmas", "seeds", "solvers"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        if any(not 0 <= q <= 1 for q in self.qs):
            raise ValueError("q values must lie in [0, 1]")
        if any(s < 0 for s in self.sigmas):
            raise ValueError("sigma values must be nonnegative")
        if not 0 <= self.p <= 1 or self.n < 2:
            raise ValueError("need n >= 2 and p in [0, 1]")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown:
            raise ValueError(f"unknown solvers {sorted(unknown)}")


def _cell(args):
    """Solve one instance with every requested solver; returns raw rows."""
    model, n, p, q, sigma, seed, solvers, record_runtime = args
    inst = generate(model, n, p, q, sigma, seed)
    rows = []
    for name in solvers:
        row = {"solver": name, "model": model, "n": n, "p": p, "q": q, "sigma": sigma, "seed": seed}
        try:
            res = run_solver(name, inst.graph, seed)
            rep = error_report(res.rotations, inst.ground_truth)
            row.update(
                mean_err_deg=rep.mean_deg,
                median_err_deg=rep.median_deg,
                init_iters=res.init_iterations,
                main_iters=res.iterations,
                runtime_s=res.runtime_s if record_runtime else math.nan,
                failed=False,
            )
        except Exception as exc:  # recorded as a NaN row, reported via exit code
            log.error("%s failed on %s q=%g sigma=%g seed=%d: %s", name, model, q, sigma, seed, exc)
            row.update(
                mean_err_deg=math.nan,
                median_err_deg=math.nan,
                init_iters=math.nan,
                main_iters=math.nan,
                runtime_s=math.nan,
                failed=True,
            )
        rows.append(row)
    return rows


def bench_run(spec):
    """Run the sweep; returns ``(rows, n_failed)`` in canonical order.

    Rows are ordered by solver (as listed), q, sigma, then seed, and each
    (solver, q, sigma) group ends with an aggregate row whose seed is
    ``"avg"`` and whose numbers are means over seeds.
    """
    cells = [
        (spec.model, spec.n, spec.p, q, s, seed, tuple(spec.solvers), spec.record_runtime)
        for q in spec.qs
        for s in spec.sigmas
        for seed in spec.seeds
    ]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]
    raw = [row for rows in results for row in rows]

    by_key = {}
    for row in raw:
        by_key.setdefault((row["solver"], row["q"], row["sigma"]), []).append(row)
    out = []
    failed = 0
    for solver in spec.solvers:
        for q in sorted(set(spec.qs)):
            for sigma in sorted(set(spec.sigmas)):
                group = sorted(by_key.get((solver, q, sigma), []), key=lambda r: r["seed"])
                if not group:
                    continue
                failed += sum(r["failed"] for r in group)
                out.extend(group)
                avg = dict(group[0], seed="avg")
                for col in ("mean_err_deg", "median_err_deg", "init_iters", "main_iters", "runtime_s"):
                    avg[col] = float(np.mean([r[col] for r in group]))
                out.append(avg)
    return out, failed


def _format(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        return format(value, ".12g")
    return str(value)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_format(row[c]) for c in COLUMNS])
    return buf.getvalue()


def parse_values(text, kind=float):
    """Parse ``a:step:b`` (inclusive) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must look like start:step:stop, got {text!r}")
        a, step, b = (float(x) for x in parts)
        if step <= 0 or b < a:
            raise ValueError(f"empty or invalid range {text!r}")
        count = int(math.floor((b - a) / step + 1e-9)) + 1
        return tuple(kind(round(a + k * step, 12)) for k in range(count))
    return tuple(kind(x) for x in text.split(",") if x.strip())


def parse_seeds(text):
    """A single integer ``N`` means seeds ``0..N-1``; otherwise a list or range."""
    text = text.strip()
    if text.isdigit():
        return tuple(range(int(text)))
    return parse_values(text, kind=int)
