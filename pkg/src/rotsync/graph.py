"""View graph container, random graphs, 3-cycle sampling and Prim's MST."""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from rotsync.exceptions import DisconnectedGraphError
from rotsync.so3 import is_rotation

DEFAULT_CYCLES_PER_EDGE = 50


@dataclass(frozen=True, eq=False)
class ViewGraph:
    """Undirected measurement graph.

    Edges are stored once with ``i < j`` and sorted lexicographically; the
    measurement on the reverse orientation is the transpose, ``R_ji = R_ij^T``.

    Attributes:
        n: number of nodes.
        edges: int array of shape ``(m, 2)``.
        rotations: float array of shape ``(m, 3, 3)``, ``R_ij ~ R_i R_j^T``.
    """

    n: int
    edges: np.ndarray
    rotations: np.ndarray
    _keys: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        rots = np.asarray(self.rotations, dtype=float).reshape(-1, 3, 3)
        n = int(self.n)
        if n < 1:
            raise ValueError("graph needs at least one node")
        if len(edges) != len(rots):
            raise ValueError(f"{len(edges)} edges but {len(rots)} rotations")
        if len(edges):
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint out of range [0, n)")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
        # canonical orientation i < j
        flip = edges[:, 0] > edges[:, 1]
        if np.any(flip):
            edges = edges.copy()
            rots = rots.copy()
            edges[flip] = edges[flip][:, ::-1]
            rots[flip] = np.swapaxes(rots[flip], -1, -2)
        keys = edges[:, 0] * n + edges[:, 1]
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        if len(keys) > 1 and np.any(keys[1:] == keys[:-1]):
            raise ValueError("duplicate edges are not allowed")
        edges = edges[order]
        rots = rots[order]
        edges.setflags(write=False)
        rots.setflags(write=False)
        keys.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "rotations", rots)
        object.__setattr__(self, "_keys", keys)

    @property
    def m(self):
        return len(self.edges)

    def edge_index(self, i, j):
        """Index of undirected edge ``{i, j}`` (arrays allowed); -1 if absent."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        key = np.minimum(i, j) * self.n + np.maximum(i, j)
        if len(self._keys) == 0:
            return np.full(key.shape, -1, dtype=np.int64)
        pos = np.minimum(np.searchsorted(self._keys, key), len(self._keys) - 1)
        return np.where(self._keys[pos] == key, pos, -1)

    def relative(self, i, j):
        """Measurement oriented from ``i`` to ``j`` (``R_ij``; ``R_ji = R_ij^T``)."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        idx = self.edge_index(i, j)
        if np.any(idx < 0):
            raise KeyError("edge not in graph")
        R = self.rotations[idx]
        return np.where((i > j)[..., None, None], np.swapaxes(R, -1, -2), R)

    def adjacency(self):
        """Symmetric CSR adjacency matrix with unit entries."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * self.m, dtype=np.int8)
        A = sp.csr_matrix((data, (np.r_[i, j], np.r_[j, i])), shape=(self.n, self.n))
        A.sort_indices()
        return A

    def neighbors(self):
        """List of sorted neighbor arrays, one per node."""
        A = self.adjacency()
        return [A.indices[A.indptr[v] : A.indptr[v + 1]] for v in range(self.n)]


def check_view_graph(graph, *, require_connected=False, tol=1e-6):
    """Validate a :class:`ViewGraph` argument.

    Raises:
        TypeError: if ``graph`` is not a ViewGraph.
        ValueError: if a measurement is not a rotation within ``tol``.
        DisconnectedGraphError: if ``require_connected`` and it is not.
    """
    if not isinstance(graph, ViewGraph):
        raise TypeError(f"expected ViewGraph, got {type(graph).__name__}")
    if not np.all(np.isfinite(graph.rotations)):
        raise ValueError("measurements contain non-finite values")
    bad = ~is_rotation(graph.rotations, tol=tol)
    if np.any(bad):
        e = int(np.flatnonzero(bad)[0])
        i, j = graph.edges[e]
        raise ValueError(f"measurement on edge ({i}, {j}) is not in SO(3)")
    if require_connected and not is_connected(graph):
        raise DisconnectedGraphError(f"view graph with n={graph.n}, m={graph.m} is disconnected")
    return graph


def erdos_renyi(n, p, rng):
    """Edge set of a G(n, p) random graph as an ``(m, 2)`` array, ``i < j``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return np.stack([iu[keep], ju[keep]], axis=1).astype(np.int64)


def is_connected(graph):
    """Breadth-first reachability from node 0."""
    if graph.n <= 1:
        return True
    nbrs = graph.neighbors()
    seen = np.zeros(graph.n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        v = queue.popleft()
        for u in nbrs[v]:
            if not seen[u]:
                seen[u] = True
                count += 1
                queue.append(u)
    return count == graph.n


@dataclass(frozen=True, eq=False)
class CycleTable:
    """Sampled 3-cycles per edge.

    Row ``e`` describes edge ``(i, j) = graph.edges[e]``. Cycle-free edges
    have all-``-1`` rows and ``cycle_free[e] == True``.

    Attributes:
        samples: ``(m, L)`` third vertices ``k``.
        leg_ik: ``(m, L)`` edge index of ``{i, k}``.
        leg_jk: ``(m, L)`` edge index of ``{j, k}``.
        cycle_free: ``(m,)`` flags.
        inconsistencies: ``(m, L)`` values ``d_ij,k`` or ``None`` until filled.
    """

    samples: np.ndarray
    leg_ik: np.ndarray
    leg_jk: np.ndarray
    cycle_free: np.ndarray
    inconsistencies: np.ndarray | None = None

    @property
    def per_edge(self):
        return self.samples.shape[1]

    def with_inconsistencies(self, d):
        d = np.asarray(d, dtype=float)
        if d.shape != self.samples.shape:
            raise ValueError("inconsistency array shape does not match samples")
        return CycleTable(self.samples, self.leg_ik, self.leg_jk, self.cycle_free, d)


def sample_cycles(graph, per_edge=DEFAULT_CYCLES_PER_EDGE, rng=None, *, chunk=4096):
    """Sample third vertices of 3-cycles for every edge, with replacement.

    Each edge draws ``per_edge`` nodes uniformly from its common-neighbor set.
    Edges with no common neighbor are flagged cycle-free.
    """
    if per_edge < 1:
        raise ValueError("per_edge must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    m = graph.m
    A = graph.adjacency()
    samples = np.full((m, per_edge), -1, dtype=np.int64)
    cycle_free = np.zeros(m, dtype=bool)
    u = rng.random((m, per_edge))
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        I = graph.edges[start:stop, 0]
        J = graph.edges[start:stop, 1]
        common = A[I].multiply(A[J]).tocsr()
        common.eliminate_zeros()
        common.sort_indices()
        counts = np.diff(common.indptr)
        free = counts == 0
        cycle_free[start:stop] = free
        pick = np.floor(u[start:stop] * counts[:, None]).astype(np.int64)
        pick = np.minimum(pick, np.maximum(counts - 1, 0)[:, None])
        if len(common.indices) == 0:
            continue
        pos = np.minimum(common.indptr[:-1, None] + pick, len(common.indices) - 1)
        samples[start:stop] = np.where(free[:, None], -1, common.indices[pos])
    i = graph.edges[:, 0][:, None]
    j = graph.edges[:, 1][:, None]
    valid = samples >= 0
    k = np.where(valid, samples, 0)
    leg_ik = np.where(valid, graph.edge_index(np.broadcast_to(i, k.shape), k), -1)
    leg_jk = np.where(valid, graph.edge_index(np.broadcast_to(j, k.shape), k), -1)
    return CycleTable(samples, leg_ik, leg_jk, cycle_free)


@dataclass(frozen=True)
class SpanningTree:
    """Rooted spanning tree.

    Attributes:
        root: root node.
        parent: ``parent[v]`` is the parent node of ``v`` (``-1`` at the root).
        parent_edge: index into ``graph.edges`` joining ``v`` to its parent.
        order: nodes in the order they were attached (root first), so a
            single forward pass propagates values from parents to children.
    """

    root: int
    parent: np.ndarray
    parent_edge: np.ndarray
    order: np.ndarray

    @property
    def edge_indices(self):
        return np.sort(self.parent_edge[self.parent_edge >= 0])


def prim_mst(graph, weights, root=0):
    """Minimum spanning tree by Prim's algorithm with a binary heap.

    Ties are broken by the smaller edge ``(i, j)`` in lexicographic order,
    which is the edge index order of :class:`ViewGraph`.

    Raises:
        DisconnectedGraphError: if some node is unreachable from ``root``.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (graph.m,):
        raise ValueError("need one weight per edge")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    n = graph.n
    A = graph.adjacency()
    # edge index for every CSR slot
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    slot_edge = graph.edge_index(rows, A.indices)

    in_tree = np.zeros(n, dtype=bool)
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    order = [root]
    in_tree[root] = True
    heap = []

    def push_from(v):
        lo, hi = A.indptr[v], A.indptr[v + 1]
        for u, e in zip(A.indices[lo:hi], slot_edge[lo:hi]):
            if not in_tree[u]:
                heapq.heappush(heap, (w[e], int(e), int(u), v))

    push_from(root)
    while heap and len(order) < n:
        _, e, u, v = heapq.heappop(heap)
        if in_tree[u]:
            continue
        in_tree[u] = True
        parent[u] = v
        parent_edge[u] = e
        order.append(u)
        push_from(u)
    if len(order) < n:
        raise DisconnectedGraphError(
            f"no spanning tree: only {len(order)} of {n} nodes reachable from node {root}"
        )
    return SpanningTree(root, parent, parent_edge, np.asarray(order, dtype=np.int64))
