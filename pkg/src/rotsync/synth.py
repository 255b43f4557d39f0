"""Synthetic rotation-synchronization instances.

Every instance draws from independent named random streams split off one
master seed, so e.g. changing ``q`` leaves the graph and ground truth intact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rotsync.exceptions import DegenerateProjectionError
from rotsync.graph import ViewGraph, erdos_renyi, is_connected
from rotsync.so3 import geodesic_distance, project_to_so3, sample_haar

STREAMS = ("graph", "ground_truth", "labels", "noise", "corruption")
MAX_GRAPH_ATTEMPTS = 100


@dataclass
class SyntheticInstance:
    graph: ViewGraph
    ground_truth: np.ndarray
    bad: np.ndarray
    true_corruption: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def good(self):
        return ~self.bad


def streams(seed):
    """Independent generators keyed by :data:`STREAMS`."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


def perturb(Rstar, sigma, rng):
    """``Proj(Rstar + sigma W)`` with ``W`` i.i.d. standard normal.

    Broadcasts over a leading batch axis. ``sigma = 0`` returns ``Rstar``
    unchanged.
    """
    Rstar = np.asarray(Rstar, dtype=float)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    W = rng.standard_normal(Rstar.shape)
    if sigma == 0:
        return Rstar.copy()
    try:
        return project_to_so3(Rstar + sigma * W)
    except DegenerateProjectionError:
        return project_to_so3(Rstar + sigma * rng.standard_normal(Rstar.shape))


def _relative(R, edges):
    return R[edges[:, 0]] @ np.swapaxes(R[edges[:, 1]], -1, -2)


def _connected_edges(n, p, seed):
    for attempt in range(MAX_GRAPH_ATTEMPTS):
        rngs = streams(seed + attempt)
        edges = erdos_renyi(n, p, rngs["graph"])
        probe = ViewGraph(n, edges, np.broadcast_to(np.eye(3), (len(edges), 3, 3)))
        if is_connected(probe):
            return edges, rngs, attempt
    raise RuntimeError(f"G({n}, {p}) stayed disconnected after {MAX_GRAPH_ATTEMPTS} resamples")


def _check_args(n, p, q, sigma):
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")


def gen_uniform(n, p, q, sigma, seed=0):
    """Erdos-Renyi graph; each edge is replaced by a Haar rotation w.p. ``q``.

    Good edges carry ``Proj(R_i R_j^T + sigma W)``.
    """
    _check_args(n, p, q, sigma)
    edges, rngs, attempts = _connected_edges(n, p, seed)
    m = len(edges)
    gt = sample_haar(rngs["ground_truth"], n)
    bad = rngs["labels"].random(m) < q
    clean = _relative(gt, edges)
    noisy = perturb(clean, sigma, rngs["noise"])
    outliers = sample_haar(rngs["corruption"], m)
    meas = np.where(bad[:, None, None], outliers, noisy)
    return _instance(n, edges, meas, gt, bad, "uniform", (n, p, q, sigma, seed), attempts)


def gen_self_consistent(n, p, q, sigma, seed=0):
    """Corrupted edges follow a second, cycle-consistent set of rotations.

    Bad edges carry ``Proj(S_i S_j^T + sigma W)`` with ``S`` an independent
    Haar draw, so 3-cycles made only of bad edges are consistent.
    """
    _check_args(n, p, q, sigma)
    edges, rngs, attempts = _connected_edges(n, p, seed)
    m = len(edges)
    gt = sample_haar(rngs["ground_truth"], n)
    alt = sample_haar(rngs["corruption"], n)
    bad = rngs["labels"].random(m) < q
    target = np.where(bad[:, None, None], _relative(alt, edges), _relative(gt, edges))
    meas = perturb(target, sigma, rngs["noise"])
    return _instance(n, edges, meas, gt, bad, "self-consistent", (n, p, q, sigma, seed), attempts)


def _instance(n, edges, meas, gt, bad, model, args, attempts):
    graph = ViewGraph(n, edges, meas)
    s_true = geodesic_distance(graph.rotations, _relative(gt, graph.edges))
    n_, p, q, sigma, seed = args
    meta = {
        "model": model,
        "n": n_,
        "p": p,
        "q": q,
        "sigma": sigma,
        "seed": seed,
        "graph_resamples": attempts,
    }
    return SyntheticInstance(graph, gt, bad, s_true, meta)


GENERATORS = {"uniform": gen_uniform, "self-consistent": gen_self_consistent}


def generate(model, n, p, q, sigma, seed=0):
    try:
        gen = GENERATORS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; expected one of {sorted(GENERATORS)}") from None
    return gen(n, p, q, sigma, seed)
