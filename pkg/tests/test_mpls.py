import math

import numpy as np
import pytest

from rotsync import mpls as mpls_mod
from rotsync.cemp import CempConfig
from rotsync.exceptions import DisconnectedGraphError, NonFiniteError
from rotsync.graph import CycleTable, ViewGraph, sample_cycles
from rotsync.metrics import error_report
from rotsync.mpls import (
    MplsConfig,
    cemp_mst_solve,
    h_estimate,
    mpls_solve,
    prepare_cycles,
    quantile_threshold,
    spanning_tree_init,
    truncated_weight,
)
from rotsync.so3 import exp_map, geodesic_distance, sample_haar
from rotsync.synth import gen_self_consistent, gen_uniform


def consistent_graph(n, edges, gt):
    edges = np.asarray(edges)
    return ViewGraph(n, edges, gt[edges[:, 0]] @ np.swapaxes(gt[edges[:, 1]], 1, 2))


class TestConfig:
    def test_schedules(self):
        cfg = MplsConfig()
        assert [cfg.keep_fraction(t) for t in range(6)] == pytest.approx([1.0, 0.95, 0.9, 0.85, 0.8, 0.8])
        assert cfg.alpha(1) == 0.5 and cfg.alpha(3) == 0.25
        assert cfg.tol == 1e-3 and cfg.max_iter == 100

    def test_rejects_bad_fractions(self):
        with pytest.raises(ValueError):
            MplsConfig(ignore_max=1.5)
        with pytest.raises(ValueError):
            MplsConfig(weight_floor=0.0)


class TestSpanningTreeInit:
    def test_noiseless_exact(self):
        inst = gen_uniform(30, 0.4, 0.0, 0.0, seed=1)
        R = spanning_tree_init(inst.graph, inst.true_corruption)
        assert np.array_equal(R[0], np.eye(3))
        assert error_report(R, inst.ground_truth).mean_deg < 1e-8

    def test_star_with_corrupted_spoke(self):
        rng = np.random.default_rng(2)
        gt = sample_haar(rng, 5)
        g0 = consistent_graph(5, [(0, 1), (0, 2), (0, 3), (0, 4)], gt)
        rots = g0.rotations.copy()
        rots[2] = exp_map([0.0, 0.0, 1.0]) @ rots[2]
        g = ViewGraph(5, g0.edges, rots)
        R = spanning_tree_init(g, np.array([0.0, 0.0, 0.9, 0.0]))
        # gauge fixed by R_0 = I, so compare against gt_i gt_0^T
        ref = gt @ gt[0].T
        err = geodesic_distance(R, ref)
        np.testing.assert_allclose(err[[0, 1, 2, 4]], 0, atol=1e-12)
        assert abs(err[3] - 1.0 / math.pi) < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_cemp_guided_tree_avoids_bad_edges(self, seed):
        inst = gen_uniform(50, 0.5, 0.3, 0.0, seed=seed)
        res = cemp_mst_solve(inst.graph, MplsConfig(seed=seed))
        assert error_report(res.rotations, inst.ground_truth).mean_deg < 1e-6
        assert (res.init_iterations, res.iterations) == (6, 0)

    def test_disconnected(self):
        g = ViewGraph(4, [(0, 1), (2, 3)], np.broadcast_to(np.eye(3), (2, 3, 3)))
        with pytest.raises(DisconnectedGraphError):
            spanning_tree_init(g, np.zeros(2))


class TestQuantile:
    def test_keep_all_is_max(self):
        v = np.random.default_rng(3).random(37)
        tau = quantile_threshold(v, 1.0)
        assert tau >= v.max() and not np.any(v > tau)

    def test_deciles(self):
        v = np.arange(1, 11) / 10
        tau = quantile_threshold(v, 0.8)
        assert tau == 0.8 and np.sum(v > tau) == 2

    def test_sort_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            m = int(rng.integers(1, 300))
            v = rng.random(m)
            keep = float(rng.choice([1.0, 0.95, 0.9, 0.85, 0.8]))
            tau = quantile_threshold(v, keep)
            above = int(np.sum(v > tau))
            expected = m - min(max(math.ceil(round(keep * m, 9)), 1), m)
            assert above == expected

    def test_empty(self):
        with pytest.raises(ValueError):
            quantile_threshold([], 0.9)


class TestTruncatedWeight:
    def test_examples(self):
        assert truncated_weight(0.0, 0.0) == 1e8
        assert truncated_weight(1.0, 0.5) == 1e-8
        assert truncated_weight(0.25, 1.0) == 8.0

    def test_range(self):
        x = np.random.default_rng(5).random(1000)
        w = truncated_weight(x, 0.5)
        assert np.all((w >= 1e-8) & (w <= 1e8))


class TestHEstimate:
    def _cycles(self, d, ik, jk):
        d = np.asarray(d, float)
        return CycleTable(np.zeros(d.shape, np.int64), np.asarray(ik), np.asarray(jk), np.zeros(len(d), bool), d)

    def test_equal_residuals_give_mean(self):
        rng = np.random.default_rng(6)
        d = rng.random((8, 5))
        ik = rng.integers(0, 8, (8, 5))
        jk = rng.integers(0, 8, (8, 5))
        h = h_estimate(np.full(8, 0.3), self._cycles(d, ik, jk), 32.0)
        np.testing.assert_allclose(h, d.mean(axis=1), atol=1e-14)

    def test_single_good_cycle_dominates(self):
        # edge 0 has four cycles; only the one through legs (1, 2) has clean legs
        d = np.array([[0.37, 0.9, 0.8, 0.6]] + [[0.5] * 4] * 8)
        ik = np.array([[1, 3, 5, 7]] + [[0] * 4] * 8)
        jk = np.array([[2, 4, 6, 8]] + [[0] * 4] * 8)
        r = np.array([0.1, 0.0, 0.0, 0.5, 0.6, 0.9, 0.5, 0.7, 0.55])
        h = h_estimate(r, self._cycles(d, ik, jk), 32.0)
        assert abs(h[0] - 0.37) < 1e-6

    def test_independent_formula(self):
        inst = gen_uniform(40, 0.4, 0.3, 0.05, seed=7)
        cycles = prepare_cycles(inst.graph, per_edge=20, seed=0)
        r = np.random.default_rng(8).random(inst.graph.m)
        h = h_estimate(r, cycles, 32.0)
        for e in range(inst.graph.m):
            if cycles.cycle_free[e]:
                assert h[e] == r[e]
                continue
            num = den = 0.0
            for d, a, b in zip(cycles.inconsistencies[e], cycles.leg_ik[e], cycles.leg_jk[e]):
                q = math.exp(-32.0 * (r[a] + r[b]))
                num += q * d
                den += q
            assert abs(h[e] - num / den) < 1e-12

    def test_cycle_free_fallback(self):
        g = ViewGraph(4, [(0, 1), (1, 2), (0, 2), (2, 3)], np.broadcast_to(np.eye(3), (4, 3, 3)))
        cycles = prepare_cycles(g, sample_cycles(g, 5, np.random.default_rng(0)))
        h = h_estimate(np.array([0.1, 0.2, 0.3, 0.4]), cycles, 32.0)
        assert h[3] == 0.4


class TestSolve:
    def test_noiseless_clean(self):
        inst = gen_uniform(20, 0.6, 0.0, 0.0, seed=9)
        res = mpls_solve(inst.graph)
        assert error_report(res.rotations, inst.ground_truth).mean_deg < 1e-8
        assert res.iterations <= 2 and res.init_iterations == 6

    @pytest.mark.slow
    def test_uniform_q07(self):
        inst = gen_uniform(200, 0.5, 0.7, 0.0, seed=0)
        assert error_report(mpls_solve(inst.graph).rotations, inst.ground_truth).mean_deg < 0.1

    @pytest.mark.slow
    def test_self_consistent_q048(self):
        inst = gen_self_consistent(200, 0.5, 0.48, 0.0, seed=0)
        assert error_report(mpls_solve(inst.graph).rotations, inst.ground_truth).mean_deg < 1.0

    def test_weights_and_combination_invariants(self):
        inst = gen_uniform(60, 0.4, 0.4, 0.1, seed=10)
        seen = []

        def check(t, state):
            w, h, r, c = state["weights"], state["cycle_estimates"], state["residuals"], state["combined"]
            assert np.all((w >= 1e-8) & (w <= 1e8))
            lo, hi = np.minimum(h, r), np.maximum(h, r)
            assert np.all(c >= lo - 1e-15) and np.all(c <= hi + 1e-15)
            keep = MplsConfig().keep_fraction(t)
            assert np.sum(c > state["tau"]) <= math.floor((1 - keep) * len(c) + 1e-9)
            seen.append(t)

        res = mpls_solve(inst.graph, callback=check)
        assert seen == list(range(1, res.iterations + 1))
        assert len(res.stats) == res.iterations

    def test_gauge_invariance(self):
        inst = gen_uniform(40, 0.5, 0.2, 0.0, seed=11)
        Q = sample_haar(np.random.default_rng(12))
        gtQ = inst.ground_truth @ Q
        edges = inst.graph.edges
        rots = np.where(
            inst.bad[:, None, None],
            inst.graph.rotations,
            gtQ[edges[:, 0]] @ np.swapaxes(gtQ[edges[:, 1]], 1, 2),
        )
        a = mpls_solve(inst.graph)
        b = mpls_solve(ViewGraph(inst.graph.n, edges, rots))
        ea = error_report(a.rotations, inst.ground_truth).mean_deg
        eb = error_report(b.rotations, gtQ).mean_deg
        assert abs(ea - eb) < 1e-9

    def test_deterministic(self):
        inst = gen_uniform(50, 0.4, 0.3, 0.05, seed=13)
        a, b = mpls_solve(inst.graph), mpls_solve(inst.graph)
        assert np.array_equal(a.rotations, b.rotations)
        assert np.array_equal(a.weights, b.weights)
        assert a.stats == b.stats

    def test_reuses_given_cycles(self):
        inst = gen_uniform(30, 0.5, 0.2, 0.0, seed=14)
        cycles = sample_cycles(inst.graph, 10, np.random.default_rng(99))
        a = mpls_solve(inst.graph, MplsConfig(cycles_per_edge=10, seed=5), cycles=cycles)
        b = mpls_solve(inst.graph, MplsConfig(cycles_per_edge=10, seed=99))
        assert np.array_equal(a.rotations, b.rotations)

    def test_max_iter_cap(self):
        inst = gen_uniform(40, 0.5, 0.5, 0.3, seed=15)
        res = mpls_solve(inst.graph, MplsConfig(tol=0.0, max_iter=3))
        assert res.iterations == 3

    def test_disconnected(self):
        g = ViewGraph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], np.broadcast_to(np.eye(3), (6, 3, 3)))
        with pytest.raises(DisconnectedGraphError):
            mpls_solve(g)

    def test_non_finite_aborts(self, monkeypatch):
        inst = gen_uniform(20, 0.6, 0.2, 0.0, seed=16)
        monkeypatch.setattr(mpls_mod, "h_estimate", lambda r, c, b: np.full_like(r, np.nan))
        with pytest.raises(NonFiniteError, match="iteration 1"):
            mpls_solve(inst.graph)

    def test_custom_cemp_schedule(self):
        inst = gen_uniform(30, 0.5, 0.2, 0.0, seed=17)
        res = mpls_solve(inst.graph, MplsConfig(cemp=CempConfig(T=3, beta=(1, 3, 9, 27))))
        assert res.init_iterations == 4
        assert error_report(res.rotations, inst.ground_truth).mean_deg < 1e-6
