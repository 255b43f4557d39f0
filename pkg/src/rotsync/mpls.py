"""Message passing least squares for rotation averaging.

The solver runs cycle-edge message passing to estimate corruption levels,
initializes rotations along the minimum spanning tree of those estimates,
and then alternates a weighted Lie-algebraic averaging step with a weight
update that mixes tangent residuals with cycle-based re-estimates.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from rotsync.cemp import CempConfig, cemp_run, cycle_inconsistencies, weighted_cycle_average
from rotsync.exceptions import NonFiniteError
from rotsync.graph import DEFAULT_CYCLES_PER_EDGE, check_view_graph, prim_mst, sample_cycles
from rotsync.laa import apply_update, edge_tangents, mean_update_norm, residuals, weighted_tangent_ls

WEIGHT_FLOOR = 1e-8
WEIGHT_CAP = 1e8


def power_reweight(power=1.5, cap=WEIGHT_CAP):
    """``F(x) = min(x**-power, cap)``; ``power=1.5`` pairs with ``rho(x) = sqrt(x)``."""

    def F(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.minimum(np.where(x > 0, x, 0.0) ** -power, cap)

    return F


def default_alpha(t):
    return 1.0 / (t + 1)


@dataclass(frozen=True)
class MplsConfig:
    """Settings for :func:`mpls_solve`.

    Attributes:
        cemp: message-passing schedule; its last ``beta`` is also used to
            re-estimate corruption from residuals.
        cycles_per_edge: 3-cycles sampled per edge.
        alpha: ``t -> alpha_t``, the weight of the cycle estimate at step ``t``.
        ignore_step, ignore_max: at step ``t`` the fraction
            ``min(ignore_step * t, ignore_max)`` of edges with the largest
            combined statistic is truncated to the weight floor.
        reweight: ``F``; defaults to ``min(x**-1.5, 1e8)``.
        weight_floor: weight of truncated edges.
        tol: stop once the mean node update norm is below this.
        max_iter: cap on main-loop iterations.
        seed: seeds cycle sampling when no table is passed in.
    """

    cemp: CempConfig = field(default_factory=CempConfig)
    cycles_per_edge: int = DEFAULT_CYCLES_PER_EDGE
    alpha: object = default_alpha
    ignore_step: float = 0.05
    ignore_max: float = 0.2
    reweight: object = field(default_factory=power_reweight)
    weight_floor: float = WEIGHT_FLOOR
    tol: float = 1e-3
    max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.ignore_step <= 1 or not 0 <= self.ignore_max <= 1:
            raise ValueError("ignored fractions must lie in [0, 1]")
        if self.weight_floor <= 0:
            raise ValueError("weight_floor must be positive")
        if self.max_iter < 1 or self.cycles_per_edge < 1:
            raise ValueError("max_iter and cycles_per_edge must be >= 1")

    def keep_fraction(self, t):
        return 1.0 - min(self.ignore_step * t, self.ignore_max)


@dataclass
class SolveResult:
    """Output of a rotation-averaging solver.

    ``init_iterations`` counts initialization passes (CEMP passes for MPLS,
    warm-start iterations for IRLS) and ``iterations`` the main loop.
    """

    rotations: np.ndarray
    init_iterations: int
    iterations: int
    stats: list
    weights: np.ndarray
    residuals: np.ndarray
    runtime_s: float = float("nan")
    corruption: np.ndarray | None = None
    cycle_estimates: np.ndarray | None = None


def _check_finite(a, what):
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"non-finite values in {what}")


def spanning_tree_init(graph, s, root=0):
    """Propagate measurements along the MST of weights ``s`` from ``R_root = I``."""
    tree = prim_mst(graph, s, root=root)
    R = np.empty((graph.n, 3, 3))
    R[root] = np.eye(3)
    children = tree.order[1:]
    R_cp = graph.relative(children, tree.parent[children])
    slot = np.empty(graph.n, dtype=np.int64)
    slot[children] = np.arange(len(children))
    for v in children:
        R[v] = R_cp[slot[v]] @ R[tree.parent[v]]
    return R


def quantile_threshold(values, keep_fraction):
    """Smallest value ``v`` with empirical CDF ``F(v) >= keep_fraction``.

    Values strictly above the result make up the top
    ``1 - keep_fraction`` share; with ``keep_fraction >= 1`` the maximum is
    returned, so nothing lies above it.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("need at least one value")
    # tolerance absorbs products like 0.95 * 100 = 95.00000000000001
    k = math.ceil(keep_fraction * v.size - 1e-9)
    k = min(max(k, 1), v.size)
    return float(v[k - 1])


def truncated_weight(x, tau, F=None, floor=WEIGHT_FLOOR):
    """``F(x)`` where ``x <= tau``, else ``floor``."""
    F = F or power_reweight()
    x = np.asarray(x, dtype=float)
    return np.where(x <= tau, F(x), floor)


def h_estimate(r, cycles, beta):
    """Cycle-based corruption estimate from residuals ``r``.

    Averages each edge's cycle inconsistencies with weights
    ``exp(-beta (r_ik + r_jk))``. Cycle-free edges fall back to ``r``.
    """
    r = np.asarray(r, dtype=float)
    h = weighted_cycle_average(
        cycles.inconsistencies, cycles.leg_ik, cycles.leg_jk, cycles.cycle_free, r, beta
    )
    return np.where(cycles.cycle_free, r, h)


def prepare_cycles(graph, cycles=None, per_edge=DEFAULT_CYCLES_PER_EDGE, seed=0):
    """Sample cycles (if needed) and fill their inconsistencies."""
    if cycles is None:
        cycles = sample_cycles(graph, per_edge, np.random.default_rng(seed))
    if cycles.inconsistencies is None:
        cycles = cycle_inconsistencies(graph, cycles)
    return cycles


def cemp_mst_solve(graph, cfg=None, cycles=None):
    """Corruption estimation followed by spanning-tree propagation only."""
    cfg = cfg or MplsConfig()
    check_view_graph(graph, require_connected=True)
    t0 = time.perf_counter()
    cycles = prepare_cycles(graph, cycles, cfg.cycles_per_edge, cfg.seed)
    s = cemp_run(cycles, cfg.cemp)
    R = spanning_tree_init(graph, s)
    r = residuals(graph, np.zeros((graph.n, 3)), edge_tangents(graph, R))
    return SolveResult(
        rotations=R,
        init_iterations=cfg.cemp.T + 1,
        iterations=0,
        stats=[],
        weights=np.ones(graph.m),
        residuals=r,
        runtime_s=time.perf_counter() - t0,
        corruption=s,
    )


def mpls_solve(graph, cfg=None, cycles=None, callback=None):
    """Robust rotation averaging by message passing least squares.

    Args:
        graph: connected view graph.
        cfg: solver settings; see :class:`MplsConfig`.
        cycles: optional pre-sampled cycle table, reused as given.
        callback: called as ``callback(t, state)`` after every main-loop
            iteration; ``state`` holds ``rotations``, ``update``,
            ``residuals``, ``cycle_estimates``, ``combined``, ``tau`` and
            ``weights``.

    Returns:
        SolveResult with ``init_iterations = T + 1`` message-passing passes.

    Raises:
        DisconnectedGraphError: if ``graph`` is not connected.
        NonFiniteError: if an intermediate quantity becomes NaN or inf.
    """
    cfg = cfg or MplsConfig()
    check_view_graph(graph, require_connected=True)
    t0 = time.perf_counter()
    cycles = prepare_cycles(graph, cycles, cfg.cycles_per_edge, cfg.seed)
    beta_T = cfg.cemp.beta[-1]
    F = cfg.reweight

    s = cemp_run(cycles, cfg.cemp)
    _check_finite(s, "corruption estimates")
    R = spanning_tree_init(graph, s)
    tau = quantile_threshold(s, cfg.keep_fraction(0))
    w = truncated_weight(s, tau, F, cfg.weight_floor)

    stats = []
    r = h = None
    for t in range(1, cfg.max_iter + 1):
        d_omega = edge_tangents(graph, R)
        x = weighted_tangent_ls(graph, w, d_omega)
        R = apply_update(R, x)
        r = residuals(graph, x, d_omega)
        h = h_estimate(r, cycles, beta_T)
        a = cfg.alpha(t)
        combined = a * h + (1.0 - a) * r
        _check_finite(combined, f"combined corruption statistic at iteration {t}")
        tau = quantile_threshold(combined, cfg.keep_fraction(t))
        w = truncated_weight(combined, tau, F, cfg.weight_floor)
        stats.append(mean_update_norm(x))
        if callback is not None:
            callback(t, {"rotations": R, "update": x, "residuals": r, "cycle_estimates": h,
                         "combined": combined, "tau": tau, "weights": w})
        if stats[-1] < cfg.tol:
            break

    return SolveResult(
        rotations=R,
        init_iterations=cfg.cemp.T + 1,
        iterations=len(stats),
        stats=stats,
        weights=w,
        residuals=r,
        runtime_s=time.perf_counter() - t0,
        corruption=s,
        cycle_estimates=h,
    )
