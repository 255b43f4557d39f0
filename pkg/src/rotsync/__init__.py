"""Robust rotation synchronization by cycle-edge message passing and MPLS."""

from rotsync.cemp import CempConfig, cemp_run, cycle_inconsistencies
from rotsync.estimators import CEMP, CEMPMST, IRLS, MPLS
from rotsync.exceptions import (
    DegenerateProjectionError,
    DisconnectedGraphError,
    FormatError,
    IllPosedSolveError,
    NonFiniteError,
    RotsyncError,
)
from rotsync.graph import CycleTable, SpanningTree, ViewGraph, erdos_renyi, is_connected, prim_mst, sample_cycles
from rotsync.irls import IrlsConfig, irls_solve, irls_weight
from rotsync.metrics import ErrorReport, align, error_report
from rotsync.mpls import MplsConfig, SolveResult, cemp_mst_solve, mpls_solve
from rotsync.synth import SyntheticInstance, gen_self_consistent, gen_uniform

__version__ = "0.1.0"

__all__ = [
    "CEMP",
    "CEMPMST",
    "IRLS",
    "MPLS",
    "CempConfig",
    "CycleTable",
    "DegenerateProjectionError",
    "DisconnectedGraphError",
    "ErrorReport",
    "FormatError",
    "IllPosedSolveError",
    "IrlsConfig",
    "MplsConfig",
    "NonFiniteError",
    "RotsyncError",
    "SolveResult",
    "SpanningTree",
    "SyntheticInstance",
    "ViewGraph",
    "align",
    "cemp_mst_solve",
    "cemp_run",
    "cycle_inconsistencies",
    "erdos_renyi",
    "error_report",
    "gen_self_consistent",
    "gen_uniform",
    "irls_solve",
    "irls_weight",
    "is_connected",
    "mpls_solve",
    "prim_mst",
    "sample_cycles",
]
