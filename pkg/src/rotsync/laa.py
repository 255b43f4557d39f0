"""Lie-algebraic averaging: one linearized weighted least-squares step on so(3)."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from rotsync.exceptions import IllPosedSolveError
from rotsync.so3 import exp_map, log_map

DIRECT_SOLVE_MAX_N = 5000
SOLVE_RTOL = 1e-10


def relative_tangent(R_i, R_j, R_ij):
    """Tangent discrepancy ``log(R_i^T R_ij R_j)`` (broadcasts over edges)."""
    return log_map(np.swapaxes(R_i, -1, -2) @ R_ij @ R_j)


def edge_tangents(graph, rotations):
    """``relative_tangent`` evaluated on every edge of ``graph``."""
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    return relative_tangent(rotations[i], rotations[j], graph.rotations)


def weighted_laplacian(n, edges, weights):
    i, j = edges[:, 0], edges[:, 1]
    off = sp.coo_matrix((-weights, (i, j)), shape=(n, n))
    deg = np.bincount(i, weights, minlength=n) + np.bincount(j, weights, minlength=n)
    return (off + off.T + sp.diags(deg)).tocsc()


def weighted_tangent_ls(graph, weights, d_omega, anchor=0):
    """Solve ``min sum_ij w_ij ||x_i - x_j - d_omega_ij||^2`` with ``x_anchor = 0``.

    The normal equations are the weighted graph Laplacian with the anchor
    row and column removed, one right-hand side per so(3) coordinate.

    Args:
        graph: the view graph (only its edges are used).
        weights: strictly positive edge weights, shape ``(m,)``.
        d_omega: edge tangent vectors, shape ``(m, 3)``.
        anchor: gauge-fixed node.

    Returns:
        Node tangent vectors, shape ``(n, 3)``.

    Raises:
        IllPosedSolveError: if the reduced system is singular.
    """
    w = np.asarray(weights, dtype=float)
    d_omega = np.asarray(d_omega, dtype=float).reshape(graph.m, 3)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and strictly positive")
    n = graph.n
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    wd = w[:, None] * d_omega
    rhs = np.zeros((n, 3))
    np.add.at(rhs, i, wd)
    np.add.at(rhs, j, -wd)

    keep = np.arange(n) != anchor
    L = weighted_laplacian(n, graph.edges, w)[keep][:, keep]
    b = rhs[keep]
    out = np.zeros((n, 3))
    if n == 1:
        return out
    x = _solve(L, b)
    # backward error, scale-free under weights spanning 1e-8 .. 1e8
    scale = abs(L).sum(axis=1).max() * np.linalg.norm(x) + np.linalg.norm(b)
    resid = np.linalg.norm(L @ x - b) / scale if scale > 0 else 0.0
    if not np.all(np.isfinite(x)) or resid > 1e-8:
        raise IllPosedSolveError(
            f"weighted Laplacian solve failed (relative residual {resid:.3g}); "
            "graph may be disconnected under the current weights"
        )
    out[keep] = x
    return out


def _solve(L, b):
    if L.shape[0] <= DIRECT_SOLVE_MAX_N:
        try:
            lu = spla.splu(L.tocsc(), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise IllPosedSolveError(f"singular weighted Laplacian: {exc}") from exc
        return lu.solve(b)
    diag = L.diagonal()
    M = sp.diags(1.0 / diag)
    cols = []
    for c in range(b.shape[1]):
        x, info = spla.cg(L, b[:, c], rtol=SOLVE_RTOL, atol=0.0, M=M, maxiter=20 * L.shape[0])
        if info != 0:
            raise IllPosedSolveError(f"conjugate gradient did not converge (info={info})")
        cols.append(x)
    return np.stack(cols, axis=1)


def apply_update(R_prev, d_omega_i):
    """Right-multiplicative update ``R_prev exp(d_omega_i)``."""
    return np.asarray(R_prev, dtype=float) @ exp_map(d_omega_i)


def residuals(graph, node_update, d_omega):
    """Normalized tangent residual ``||x_i - x_j - d_omega_ij|| / pi``, clipped to 1.

    ``||[v]_x||_F / (sqrt(2) pi)`` equals ``||v||_2 / pi`` for a 3-vector ``v``.
    """
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    r = np.linalg.norm(node_update[i] - node_update[j] - d_omega, axis=1) / np.pi
    return np.minimum(r, 1.0)


def laa_objective(graph, weights, node_update, d_omega):
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    e = node_update[i] - node_update[j] - d_omega
    return float(np.sum(weights * np.einsum("ek,ek->e", e, e)))


def mean_update_norm(node_update):
    """Convergence statistic ``sum_i ||[x_i]||_F / (sqrt(2) n)``."""
    return float(np.linalg.norm(node_update, axis=1).mean())
