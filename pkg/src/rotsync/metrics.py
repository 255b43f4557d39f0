"""Global alignment and angular error statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rotsync.exceptions import DegenerateProjectionError
from rotsync.so3 import geodesic_distance, project_to_so3


@dataclass
class ErrorReport:
    mean_deg: float
    median_deg: float
    per_node_deg: np.ndarray
    align: np.ndarray
    runtime_s: float = float("nan")
    iterations: tuple = (0, 0)
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "mean_deg": float(self.mean_deg),
            "median_deg": float(self.median_deg),
            "runtime_s": float(self.runtime_s),
            "init_iters": int(self.iterations[0]),
            "main_iters": int(self.iterations[1]),
            "align": np.asarray(self.align).tolist(),
            "per_node_deg": np.asarray(self.per_node_deg).tolist(),
            **self.extra,
        }


def _check_pair(est, gt):
    est = np.asarray(est, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if est.ndim != 3 or est.shape[1:] != (3, 3) or est.shape != gt.shape or len(est) == 0:
        raise ValueError(f"need two nonempty (n, 3, 3) arrays of equal size, got {est.shape} and {gt.shape}")
    return est, gt


def align(est, gt):
    """Rotation ``Q`` minimizing ``sum_i ||est_i Q - gt_i||_F^2``."""
    est, gt = _check_pair(est, gt)
    M = np.einsum("nki,nkj->ij", est, gt)
    try:
        return project_to_so3(M)
    except DegenerateProjectionError as exc:
        raise DegenerateProjectionError("alignment is ambiguous: cross-correlation sum is degenerate") from exc


def per_node_errors(est, gt, R_align):
    """Angle in degrees between ``est_i R_align`` and ``gt_i``."""
    return 180.0 * geodesic_distance(np.asarray(est) @ R_align, gt)


def error_report(est, gt, *, runtime_s=float("nan"), iterations=(0, 0)):
    """Align ``est`` to ``gt`` and summarize per-node angular errors.

    For an even number of nodes the median is the lower of the two middle
    order statistics.
    """
    est, gt = _check_pair(est, gt)
    R = align(est, gt)
    errs = per_node_errors(est, gt, R)
    ordered = np.sort(errs)
    return ErrorReport(
        mean_deg=float(errs.mean()),
        median_deg=float(ordered[(len(ordered) - 1) // 2]),
        per_node_deg=errs,
        align=R,
        runtime_s=runtime_s,
        iterations=tuple(iterations),
    )
