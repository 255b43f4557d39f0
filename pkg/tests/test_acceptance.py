"""End-to-end acceptance checks; each prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` (output also appears
without ``-s``).
"""

import time

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from rotsync.cemp import cemp_run, cycle_inconsistencies
from rotsync.cli import main
from rotsync.graph import ViewGraph, sample_cycles
from rotsync.io import read_graph, read_rotations
from rotsync.irls import IrlsConfig, irls_solve
from rotsync.metrics import error_report
from rotsync.mpls import mpls_solve
from rotsync.so3 import exp_map, geodesic_distance, log_map, project_to_so3, sample_haar
from rotsync.synth import gen_self_consistent, gen_uniform

SEEDS = range(10)
CASES = 10_000

pytestmark = pytest.mark.slow


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, f"criterion {number} failed: {detail}"

    return emit


def mean_err(result, inst):
    return error_report(result.rotations, inst.ground_truth).mean_deg


def test_c1_uniform_exact_recovery(verdict):
    worst, slowest = 0.0, 0.0
    for q in np.round(np.arange(0.1, 0.71, 0.1), 10):
        for seed in SEEDS:
            inst = gen_uniform(200, 0.5, q, 0.0, seed=seed)
            t0 = time.perf_counter()
            res = mpls_solve(inst.graph)
            slowest = max(slowest, time.perf_counter() - t0)
            worst = max(worst, mean_err(res, inst))
    verdict(1, "uniform corruption q<=0.7 recovered by MPLS", worst < 0.1 and slowest < 60,
            f"worst mean error {worst:.3g} deg, slowest run {slowest:.2f} s")


def test_c2_near_recovery_at_q08(verdict):
    errs = {"mpls": [], "gm": [], "l12": []}
    for seed in SEEDS:
        inst = gen_uniform(200, 0.5, 0.8, 0.0, seed=seed)
        errs["mpls"].append(mean_err(mpls_solve(inst.graph), inst))
        for loss in ("gm", "l12"):
            errs[loss].append(mean_err(irls_solve(inst.graph, IrlsConfig(loss=loss)), inst))
    avg = {k: float(np.mean(v)) for k, v in errs.items()}
    ok = avg["mpls"] < 5 and avg["gm"] > 20 and avg["l12"] > 20
    verdict(2, "q=0.8: MPLS near recovery, IRLS breakdown", ok,
            f"avg mpls {avg['mpls']:.3g}, irls-gm {avg['gm']:.3g}, irls-l12 {avg['l12']:.3g} deg")


def test_c3_self_consistent(verdict):
    errs = [mean_err(mpls_solve(inst.graph), inst)
            for inst in (gen_self_consistent(200, 0.5, 0.48, 0.0, seed=s) for s in SEEDS)]
    avg = float(np.mean(errs))
    verdict(3, "self-consistent q=0.48 recovered by MPLS", avg < 1.0,
            f"avg {avg:.3g} deg, max {max(errs):.3g} deg")


def test_c4_noise_ordering(verdict):
    lines, ok = [], True
    for q in (0.2, 0.4, 0.6):
        errs = {"mpls": [], "gm": [], "l12": []}
        for seed in SEEDS:
            inst = gen_uniform(200, 0.5, q, 0.1, seed=seed)
            errs["mpls"].append(mean_err(mpls_solve(inst.graph), inst))
            for loss in ("gm", "l12"):
                errs[loss].append(mean_err(irls_solve(inst.graph, IrlsConfig(loss=loss)), inst))
        avg = {k: float(np.mean(v)) for k, v in errs.items()}
        ok &= avg["mpls"] <= avg["gm"] and avg["mpls"] <= avg["l12"]
        lines.append(f"q={q}: {avg['mpls']:.3g}/{avg['gm']:.3g}/{avg['l12']:.3g}")
    verdict(4, "sigma=0.1: MPLS <= IRLS-GM and IRLS-l1/2", ok, "mpls/gm/l12 deg; " + ", ".join(lines))


def test_c5_cemp_separation(verdict):
    aucs = []
    for seed in SEEDS:
        inst = gen_uniform(200, 0.5, 0.5, 0.0, seed=seed)
        c = cycle_inconsistencies(inst.graph, sample_cycles(inst.graph, 50, np.random.default_rng(seed)))
        aucs.append(roc_auc_score(inst.bad, cemp_run(c)))
    verdict(5, "CEMP ranks bad edges above good ones", min(aucs) > 0.95, f"min AUC {min(aucs):.6f}")


def test_c6_good_cycles(verdict):
    # CASES disjoint triangles (a, b, c); edge ab is arbitrary, the other legs exact
    rng = np.random.default_rng(6)
    gt = sample_haar(rng, 3 * CASES)
    a, b, c = (np.arange(CASES) * 3 + k for k in range(3))
    edges = np.concatenate([np.stack([a, b], 1), np.stack([a, c], 1), np.stack([b, c], 1)])
    rel = gt[edges[:, 0]] @ np.swapaxes(gt[edges[:, 1]], 1, 2)
    rel[:CASES] = sample_haar(rng, CASES)
    g = ViewGraph(3 * CASES, edges, rel)
    cyc = cycle_inconsistencies(g, sample_cycles(g, 1, rng))
    e_ab = np.array([g.edge_index(i, j) for i, j in zip(a, b)])
    s_true = geodesic_distance(g.rotations[e_ab], gt[a] @ np.swapaxes(gt[b], 1, 2))
    dev = float(np.abs(cyc.inconsistencies[e_ab, 0] - s_true).max())
    verdict(6, f"{CASES} good triangles reproduce the corruption level", dev < 1e-9, f"max deviation {dev:.3g}")


def test_c7_geometry(verdict):
    rng = np.random.default_rng(7)
    R1, R2, R3 = (sample_haar(rng, CASES) for _ in range(3))
    d = geodesic_distance(R1, R2)
    bi = max(np.abs(d - geodesic_distance(R3 @ R1, R3 @ R2)).max(),
             np.abs(d - geodesic_distance(R1 @ R3, R2 @ R3)).max())

    w = rng.standard_normal((CASES, 3))
    w *= (np.pi - 1e-3) * rng.random((CASES, 1)) ** (1 / 3) / np.linalg.norm(w, axis=1, keepdims=True)
    rt = float(np.linalg.norm(log_map(exp_map(w)) - w, axis=1).max())

    # optimality: no small rotation of the projection gets closer to A
    A = rng.standard_normal((CASES, 3, 3))
    P = project_to_so3(A)
    base = np.linalg.norm(P - A, axis=(1, 2))
    gap = np.inf
    for _ in range(20):
        cand = exp_map(rng.standard_normal((CASES, 3)) * 0.05) @ P
        gap = min(gap, float((np.linalg.norm(cand - A, axis=(1, 2)) - base).min()))
    # for det(A) > 0 it also matches the Newton polar iteration
    pos = np.linalg.det(A) > 0
    X = A[pos]
    for _ in range(40):
        X = 0.5 * (X + np.swapaxes(np.linalg.inv(X), 1, 2))
    polar = float(np.abs(P[pos] - X).max())

    gauge = 0.0
    for _ in range(CASES):
        est, gt, Q = sample_haar(rng, 5), sample_haar(rng, 5), sample_haar(rng)
        gauge = max(gauge, abs(error_report(est, gt).mean_deg - error_report(est @ Q, gt).mean_deg))

    ok = bi < 1e-9 and rt < 1e-8 and gap >= -1e-12 and polar < 1e-9 and gauge < 1e-9
    verdict(7, f"geometry suite over {CASES} cases each", ok,
            f"bi-invariance {bi:.2g}, round trip {rt:.2g}, projection gap {gap:.2g}, "
            f"polar {polar:.2g}, gauge {gauge:.2g} deg")


def test_c8_bench_determinism(verdict, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"bench{k}.csv"
        code = main(["bench", "--model", "uniform", "--n", "40", "--p", "0.5", "--q", "0.1:0.2:0.5",
                     "--sigma", "0,0.1", "--seeds", "2", "--out", str(path), "--jobs", str(k + 1)])
        assert code == 0
        outs.append(path.read_bytes())
    n_lines = outs[0].count(b"\n")
    verdict(8, "bench CSV is byte-identical across runs", outs[0] == outs[1],
            f"{len(outs[0])} bytes, {n_lines} lines")


def test_c9_external_graph_loader(verdict, tmp_path, capsys):
    # an externally produced graph: 8-digit numbers, shuffled edge order
    rng = np.random.default_rng(9)
    gt = sample_haar(rng, 12)
    pairs = [(i, j) for i in range(12) for j in range(i + 1, 12) if rng.random() < 0.7]
    rng.shuffle(pairs)
    lines = [f"rotsync-graph v1 n=12 m={len(pairs)}"]
    for i, j in pairs:
        R = gt[i] @ gt[j].T
        lines.append(f"{i} {j} " + " ".join(f"{v:.8f}" for v in R.ravel()))
    graph_file = tmp_path / "external.txt"
    graph_file.write_text("\n".join(lines) + "\n")
    truth = tmp_path / "truth.txt"
    truth.write_text("rotsync-rots v1 n=12\n" + "\n".join(
        f"{i} " + " ".join(f"{v:.8f}" for v in gt[i].ravel()) for i in range(12)) + "\n")

    g = read_graph(graph_file)
    code = main(["solve", "--graph", str(graph_file), "--out", str(tmp_path / "est.txt")])
    capsys.readouterr()
    err = error_report(read_rotations(tmp_path / "est.txt"), read_rotations(truth)).mean_deg
    ortho = float(np.abs(np.swapaxes(g.rotations, 1, 2) @ g.rotations - np.eye(3)).max())
    ok = code == 0 and g.m == len(pairs) and err < 1e-5 and ortho < 1e-12
    verdict(9, "externally supplied v1 graph loads and solves", ok, f"m={g.m}, mean error {err:.3g} deg")
