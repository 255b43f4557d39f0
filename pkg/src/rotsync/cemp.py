"""Cycle-edge message passing: corruption-level estimation from 3-cycles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rotsync.so3 import rotation_angle


def default_beta(T=5):
    return tuple(float(2**t) for t in range(T + 1))


@dataclass(frozen=True)
class CempConfig:
    """Iteration count and the increasing inverse-temperature schedule.

    ``beta`` has ``T + 1`` entries, ``beta[t]`` being used at iteration ``t``.
    """

    T: int = 5
    beta: tuple = field(default_factory=default_beta)

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if len(beta) != self.T + 1:
            raise ValueError(f"beta needs T + 1 = {self.T + 1} entries, got {len(beta)}")
        if any(b <= 0 for b in beta) or any(b1 <= b0 for b0, b1 in zip(beta, beta[1:])):
            raise ValueError("beta must be positive and strictly increasing")
        object.__setattr__(self, "beta", beta)


def cycle_inconsistencies(graph, cycles):
    """Fill ``d_ij,k = d(R_ij R_jk R_ki, I)`` for every sampled cycle."""
    valid = cycles.samples >= 0
    I = np.broadcast_to(graph.edges[:, 0][:, None], cycles.samples.shape)[valid]
    J = np.broadcast_to(graph.edges[:, 1][:, None], cycles.samples.shape)[valid]
    K = cycles.samples[valid]
    Rij = graph.rotations[np.broadcast_to(np.arange(graph.m)[:, None], cycles.samples.shape)[valid]]
    Rjk = _oriented(graph, cycles.leg_jk[valid], J, K)
    Rki = _oriented(graph, cycles.leg_ik[valid], K, I)
    d = np.zeros(cycles.samples.shape)
    d[valid] = rotation_angle(Rij @ Rjk @ Rki) / np.pi
    return cycles.with_inconsistencies(d)


def _oriented(graph, edge_idx, a, b):
    R = graph.rotations[edge_idx]
    return np.where((a > b)[:, None, None], np.swapaxes(R, -1, -2), R)


def weighted_cycle_average(d, leg_ik, leg_jk, cycle_free, edge_values, beta):
    """Average ``d`` over each edge's cycles with weights ``exp(-beta (x_ik + x_jk))``.

    The exponent is shifted per edge by its minimum so the normalizer never
    underflows. Cycle-free rows yield NaN; callers substitute their fallback.
    """
    free = np.asarray(cycle_free, dtype=bool)
    ik = np.where(leg_ik >= 0, leg_ik, 0)
    jk = np.where(leg_jk >= 0, leg_jk, 0)
    expo = edge_values[ik] + edge_values[jk]
    expo = np.where(free[:, None], 0.0, expo)
    expo = expo - expo.min(axis=1, keepdims=True)
    p = np.exp(-beta * expo)
    out = np.einsum("ek,ek->e", p, d) / p.sum(axis=1)
    out[free] = np.nan
    return out


def cemp_run(cycles, cfg=None, *, return_history=False):
    """Estimate corruption levels ``s_ij,T``.

    Args:
        cycles: table with inconsistencies filled.
        cfg: iteration settings; defaults to ``T = 5`` and ``beta_t = 2**t``.
        return_history: also return the list ``[s_0, ..., s_{T+1}]``.

    Returns:
        Array of shape ``(m,)`` in ``[0, 1]``; cycle-free edges get 1.
    """
    if cycles.inconsistencies is None:
        raise ValueError("cycle inconsistencies have not been computed")
    cfg = cfg or CempConfig()
    d = cycles.inconsistencies
    free = cycles.cycle_free
    s = d.mean(axis=1)
    s[free] = 1.0
    history = [s]
    for t in range(cfg.T + 1):
        s = weighted_cycle_average(d, cycles.leg_ik, cycles.leg_jk, free, s, cfg.beta[t])
        s[free] = 1.0
        history.append(s)
    s = np.clip(s, 0.0, 1.0)
    if return_history:
        return s, history
    return s
