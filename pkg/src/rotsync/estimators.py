"""scikit-learn style wrappers around the solvers.

``fit`` takes a :class:`~rotsync.graph.ViewGraph`. Fitted solvers expose
``rotations_``; ``predict`` maps node pairs to relative rotations and
``score`` is the negated aligned mean error in degrees, so larger is better.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from rotsync.cemp import CempConfig, cemp_run, default_beta
from rotsync.graph import ViewGraph, check_view_graph
from rotsync.irls import IrlsConfig, irls_solve
from rotsync.metrics import error_report
from rotsync.mpls import MplsConfig, cemp_mst_solve, mpls_solve, power_reweight, prepare_cycles


def check_rotations(R, n=None):
    """Validate an ``(n, 3, 3)`` array of rotations and return it as float."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 3 or R.shape[1:] != (3, 3):
        raise ValueError(f"expected an (n, 3, 3) array of rotations, got shape {R.shape}")
    if n is not None and len(R) != n:
        raise ValueError(f"expected {n} rotations, got {len(R)}")
    if not np.all(np.isfinite(R)):
        raise ValueError("rotations contain non-finite values")
    return R


def check_node_pairs(X, n):
    """Accept a ViewGraph (its edges) or an ``(k, 2)`` integer array of node pairs."""
    if isinstance(X, ViewGraph):
        return X.edges
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 2 or not np.issubdtype(X.dtype, np.integer):
        raise ValueError("expected an integer array of node pairs with shape (k, 2)")
    if len(X) and (X.min() < 0 or X.max() >= n):
        raise ValueError(f"node index outside [0, {n})")
    return X


class _RotationSolver(BaseEstimator):
    def _solve(self, graph):
        raise NotImplementedError

    def fit(self, X, y=None):
        graph = check_view_graph(X, require_connected=True)
        result = self._solve(graph)
        self.result_ = result
        self.rotations_ = result.rotations
        self.n_init_iter_ = result.init_iterations
        self.n_iter_ = result.iterations
        self.weights_ = result.weights
        self.residuals_ = result.residuals
        return self

    def predict(self, X):
        """Relative rotations ``R_i R_j^T`` for the given node pairs."""
        check_is_fitted(self, "rotations_")
        pairs = check_node_pairs(X, len(self.rotations_))
        R = self.rotations_
        return R[pairs[:, 0]] @ np.swapaxes(R[pairs[:, 1]], -1, -2)

    def score(self, X, y):
        """Negative aligned mean angular error (degrees) against ground truth ``y``."""
        check_is_fitted(self, "rotations_")
        y = check_rotations(y, len(self.rotations_))
        return -error_report(self.rotations_, y).mean_deg


class _CempParams:
    def _cemp_config(self):
        return CempConfig(T=self.n_cemp_iter, beta=default_beta(self.n_cemp_iter) if self.beta is None else self.beta)


class MPLS(_CempParams, _RotationSolver):
    """Message passing least squares rotation averaging.

    Parameters mirror :class:`~rotsync.mpls.MplsConfig`; ``power`` sets the
    reweighting ``min(x**-power, 1e8)``.
    """

    def __init__(
        self,
        n_cemp_iter=5,
        beta=None,
        cycles_per_edge=50,
        ignore_step=0.05,
        ignore_max=0.2,
        power=1.5,
        tol=1e-3,
        max_iter=100,
        random_state=0,
    ):
        self.n_cemp_iter = n_cemp_iter
        self.beta = beta
        self.cycles_per_edge = cycles_per_edge
        self.ignore_step = ignore_step
        self.ignore_max = ignore_max
        self.power = power
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def _config(self):
        return MplsConfig(
            cemp=self._cemp_config(),
            cycles_per_edge=self.cycles_per_edge,
            ignore_step=self.ignore_step,
            ignore_max=self.ignore_max,
            reweight=power_reweight(self.power),
            tol=self.tol,
            max_iter=self.max_iter,
            seed=self.random_state,
        )

    def _solve(self, graph):
        result = mpls_solve(graph, self._config())
        self.corruption_ = result.corruption
        return result


class CEMPMST(_CempParams, _RotationSolver):
    """Corruption estimation plus minimum-spanning-tree propagation."""

    def __init__(self, n_cemp_iter=5, beta=None, cycles_per_edge=50, random_state=0):
        self.n_cemp_iter = n_cemp_iter
        self.beta = beta
        self.cycles_per_edge = cycles_per_edge
        self.random_state = random_state

    def _solve(self, graph):
        cfg = MplsConfig(cemp=self._cemp_config(), cycles_per_edge=self.cycles_per_edge, seed=self.random_state)
        result = cemp_mst_solve(graph, cfg)
        self.corruption_ = result.corruption
        return result


class IRLS(_RotationSolver):
    """IRLS rotation averaging with a GM, l_1/2 or l_1 loss."""

    def __init__(self, loss="l12", warm_start_iters=10, tol=1e-3, max_iter=100):
        self.loss = loss
        self.warm_start_iters = warm_start_iters
        self.tol = tol
        self.max_iter = max_iter

    def _solve(self, graph):
        cfg = IrlsConfig(loss=self.loss, warm_start_iters=self.warm_start_iters, tol=self.tol, max_iter=self.max_iter)
        return irls_solve(graph, cfg)


class CEMP(_CempParams, TransformerMixin, BaseEstimator):
    """Corruption-level estimator: ``transform(graph)`` returns ``s`` per edge."""

    def __init__(self, n_cemp_iter=5, beta=None, cycles_per_edge=50, random_state=0):
        self.n_cemp_iter = n_cemp_iter
        self.beta = beta
        self.cycles_per_edge = cycles_per_edge
        self.random_state = random_state

    def _estimate(self, graph):
        check_view_graph(graph)
        cycles = prepare_cycles(graph, None, self.cycles_per_edge, self.random_state)
        return cycles, cemp_run(cycles, self._cemp_config())

    def fit(self, X, y=None):
        self.cycles_, self.corruption_ = self._estimate(X)
        return self

    def transform(self, X):
        """Corruption estimates for ``X`` (deterministic given ``random_state``)."""
        check_is_fitted(self, "corruption_")
        return self._estimate(X)[1]
