"""IRLS baselines (GM and l_1/2) sharing the Lie-algebraic averaging step."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from rotsync.graph import check_view_graph
from rotsync.laa import edge_tangents, mean_update_norm, residuals, weighted_tangent_ls, apply_update
from rotsync.mpls import SolveResult, spanning_tree_init, _check_finite

WEIGHT_CAP = 1e8
LOSSES = ("gm", "l12", "l1")
# the GM scale 25 = 5^2 is in degrees, so GM sees residuals in degrees
_RESIDUAL_SCALE = {"gm": 180.0, "l12": 1.0, "l1": 1.0}


def irls_weight(x, loss, cap=WEIGHT_CAP):
    """Reweighting function ``F`` of a robust loss, evaluated at ``x >= 0``.

    ``gm``: ``25 / (x^2 + 25)^2``; ``l12``: ``min(x^-1.5, cap)``;
    ``l1``: ``min(x^-1, cap)``.
    """
    x = np.asarray(x, dtype=float)
    loss = _normalize_loss(loss)
    if loss == "gm":
        return 25.0 / (x * x + 25.0) ** 2
    power = 1.5 if loss == "l12" else 1.0
    with np.errstate(divide="ignore"):
        return np.minimum(np.where(x > 0, x, 0.0) ** -power, cap)


def _normalize_loss(loss):
    key = str(loss).lower().replace("-", "").replace("_", "").replace("/", "")
    aliases = {"gm": "gm", "l12": "l12", "l½": "l12", "l1": "l1"}
    if key not in aliases:
        raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")
    return aliases[key]


@dataclass(frozen=True)
class IrlsConfig:
    loss: str = "l12"
    cap: float = WEIGHT_CAP
    warm_start_iters: int = 10
    tol: float = 1e-3
    max_iter: int = 100

    def __post_init__(self):
        object.__setattr__(self, "loss", _normalize_loss(self.loss))
        if self.cap <= 0:
            raise ValueError("cap must be positive")
        if self.warm_start_iters < 0 or self.max_iter < 1:
            raise ValueError("iteration counts must be positive")


def irls_step(graph, rotations, weights):
    """One weighted LAA step; returns ``(new_rotations, node_update, residuals)``."""
    d_omega = edge_tangents(graph, rotations)
    x = weighted_tangent_ls(graph, weights, d_omega)
    return apply_update(rotations, x), x, residuals(graph, x, d_omega)


def irls_solve(graph, cfg=None):
    """Iteratively reweighted least squares for rotation averaging.

    Starts from propagation along an unweighted spanning tree, runs
    ``warm_start_iters`` l_1-reweighted iterations, then iterates with the
    configured loss until the mean update norm drops below ``tol``.
    """
    cfg = cfg or IrlsConfig()
    check_view_graph(graph, require_connected=True)
    t0 = time.perf_counter()
    R = spanning_tree_init(graph, np.zeros(graph.m))
    w = np.ones(graph.m)
    r = None
    for _ in range(cfg.warm_start_iters):
        R, x, r = irls_step(graph, R, w)
        _check_finite(R, "rotations during l1 warm start")
        w = irls_weight(r, "l1", cfg.cap)

    scale = _RESIDUAL_SCALE[cfg.loss]
    if r is not None:
        w = irls_weight(scale * r, cfg.loss, cfg.cap)
    stats = []
    for _ in range(cfg.max_iter):
        R, x, r = irls_step(graph, R, w)
        _check_finite(R, "rotations")
        w = irls_weight(scale * r, cfg.loss, cfg.cap)
        stats.append(mean_update_norm(x))
        if stats[-1] < cfg.tol:
            break
    return SolveResult(
        rotations=R,
        init_iterations=cfg.warm_start_iters,
        iterations=len(stats),
        stats=stats,
        weights=w,
        residuals=r,
        runtime_s=time.perf_counter() - t0,
    )

