"""Plain-text graph and rotation files.

Graph file::

    rotsync-graph v1 n=<n> m=<m>
    i j r11 r12 r13 r21 r22 r23 r31 r32 r33      (m lines, 0-based, i < j)

Rotation file::

    rotsync-rots v1 n=<n>
    i r11 r12 r13 r21 r22 r23 r31 r32 r33        (n lines, any order)

Numbers are written with 17 significant digits so doubles round-trip.
"""

from __future__ import annotations

import re

import numpy as np

from rotsync.exceptions import FormatError
from rotsync.graph import ViewGraph
from rotsync.so3 import project_to_so3

ORTHO_TOL = 1e-6
_EXACT_TOL = 1e-12
_GRAPH_HEADER = re.compile(r"^rotsync-graph v1 n=(\d+) m=(\d+)$")
_ROTS_HEADER = re.compile(r"^rotsync-rots v1 n=(\d+)$")


def _fmt(x):
    return format(float(x), ".17g")


def write_graph(path, graph):
    lines = [f"rotsync-graph v1 n={graph.n} m={graph.m}"]
    for (i, j), R in zip(graph.edges, graph.rotations):
        lines.append(" ".join([str(int(i)), str(int(j))] + [_fmt(v) for v in R.ravel()]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_rotations(path, rotations):
    rotations = np.asarray(rotations, dtype=float).reshape(-1, 3, 3)
    lines = [f"rotsync-rots v1 n={len(rotations)}"]
    for i, R in enumerate(rotations):
        lines.append(" ".join([str(i)] + [_fmt(v) for v in R.ravel()]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _body_lines(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise FormatError("empty file", path, 1)
    return lines


def _validated(R, path, lineno):
    if not np.all(np.isfinite(R)):
        raise FormatError("non-finite rotation entry", path, lineno)
    err = np.linalg.norm(R.T @ R - np.eye(3))
    det = np.linalg.det(R)
    if err > ORTHO_TOL or abs(det - 1.0) > ORTHO_TOL:
        raise FormatError(
            f"matrix is not a rotation (||R^T R - I|| = {err:.3g}, det = {det:.6g})", path, lineno
        )
    if err > _EXACT_TOL:
        R = project_to_so3(R)
    return R


def _floats(tokens, path, lineno):
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise FormatError(f"bad number: {exc}", path, lineno) from None


def read_graph(path):
    """Parse a graph file; rotations within ``1e-6`` of SO(3) are re-projected."""
    lines = _body_lines(path)
    head = _GRAPH_HEADER.match(lines[0].strip())
    if not head:
        raise FormatError("expected header 'rotsync-graph v1 n=<n> m=<m>'", path, 1)
    n, m = int(head.group(1)), int(head.group(2))
    if len(lines) - 1 != m:
        raise FormatError(f"header declares m={m} edges but file has {len(lines) - 1}", path, len(lines))
    edges = np.empty((m, 2), dtype=np.int64)
    rots = np.empty((m, 3, 3))
    seen = set()
    for e, line in enumerate(lines[1:]):
        lineno = e + 2
        tok = line.split()
        if len(tok) != 11:
            raise FormatError(f"expected 11 fields, got {len(tok)}", path, lineno)
        try:
            i, j = int(tok[0]), int(tok[1])
        except ValueError:
            raise FormatError("node indices must be integers", path, lineno) from None
        if not (0 <= i < j < n):
            raise FormatError(f"edge ({i}, {j}) violates 0 <= i < j < n={n}", path, lineno)
        if (i, j) in seen:
            raise FormatError(f"duplicate edge ({i}, {j})", path, lineno)
        seen.add((i, j))
        edges[e] = (i, j)
        rots[e] = _validated(_floats(tok[2:], path, lineno).reshape(3, 3), path, lineno)
    return ViewGraph(n, edges, rots)


def read_rotations(path):
    """Parse a rotation file into an ``(n, 3, 3)`` array ordered by node index."""
    lines = _body_lines(path)
    head = _ROTS_HEADER.match(lines[0].strip())
    if not head:
        raise FormatError("expected header 'rotsync-rots v1 n=<n>'", path, 1)
    n = int(head.group(1))
    out = np.full((n, 3, 3), np.nan)
    have = np.zeros(n, dtype=bool)
    for e, line in enumerate(lines[1:]):
        lineno = e + 2
        tok = line.split()
        if len(tok) != 10:
            raise FormatError(f"expected 10 fields, got {len(tok)}", path, lineno)
        try:
            i = int(tok[0])
        except ValueError:
            raise FormatError("node index must be an integer", path, lineno) from None
        if not 0 <= i < n:
            raise FormatError(f"node index {i} outside [0, {n})", path, lineno)
        if have[i]:
            raise FormatError(f"duplicate node index {i}", path, lineno)
        have[i] = True
        out[i] = _validated(_floats(tok[1:], path, lineno).reshape(3, 3), path, lineno)
    if not have.all():
        missing = np.flatnonzero(~have)
        raise FormatError(f"missing node indices {missing[:10].tolist()}", path)
    return out
