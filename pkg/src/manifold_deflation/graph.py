"""Neighborhood graphs, Gaussian edge weights, and the unnormalized Laplacian.

Nearest-neighbor search is exact (blocked brute force) with distance ties
broken by the smaller index, so graph construction is deterministic and
independent of any parallel schedule.  Approximate search is deliberately
not offered.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .datasets import PointCloud
from .errors import ParameterError


@dataclass(frozen=True)
class SparseSymmetric:
    """Exactly symmetric sparse matrix with a cached Frobenius norm."""

    matrix: sp.csr_matrix
    frobenius_norm: float

    @classmethod
    def from_matrix(cls, m, symmetrize=False):
        m = sp.csr_matrix(m)
        if m.shape[0] != m.shape[1]:
            raise ParameterError("matrix must be square")
        if symmetrize:
            m = ((m + m.T) * 0.5).tocsr()
        else:
            d = (m - m.T).tocoo()
            if d.nnz and np.max(np.abs(d.data)) != 0.0:
                raise ParameterError("matrix is not exactly symmetric")
        m.sum_duplicates()
        m.eliminate_zeros()
        return cls(m, float(np.sqrt(np.sum(m.data * m.data))))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetrized neighborhood graph in CSR layout.

    ``indices[indptr[i]:indptr[i+1]]`` are node i's neighbors in ascending
    order, with matching per-edge ``distances`` and (once assigned)
    ``weights``.  The adjacency is symmetric, has no self edges, and stores
    one identical distance value for both directions of every edge.
    ``points`` keeps the coordinates the graph was built from so downstream
    kernel constructions can reuse them.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    distances: np.ndarray
    weights: np.ndarray | None
    mean_neighbor_distance: float
    points: np.ndarray
    k: int | None = None
    epsilon: float | None = None
    bandwidth: float | None = None
    bandwidth_multiplier: float | None = None

    def neighbors(self, i) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return self.indices.size // 2


def _pairwise_block(points, sq_norms, lo, hi):
    d2 = sq_norms[lo:hi, None] + sq_norms[None, :] - 2.0 * (points[lo:hi] @ points.T)
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def _assemble(n, src, dst, dist, points, mean_nd, **meta):
    # Canonicalize one distance per unordered pair so both directions carry
    # the identical float, then emit both directions.
    lo = np.minimum(src, dst).astype(np.int64)
    hi = np.maximum(src, dst).astype(np.int64)
    key = lo * n + hi
    _, first = np.unique(key, return_index=True)
    lo, hi, dist = lo[first], hi[first], dist[first]
    i2 = np.concatenate([lo, hi])
    j2 = np.concatenate([hi, lo])
    dv = np.concatenate([dist, dist])
    order = np.lexsort((j2, i2))
    i2, j2, dv = i2[order], j2[order], dv[order]
    indptr = np.searchsorted(i2, np.arange(n + 1)).astype(np.int64)
    return NeighborGraph(
        n=n,
        indptr=indptr,
        indices=j2,
        distances=dv,
        weights=None,
        mean_neighbor_distance=float(mean_nd),
        points=np.array(points, dtype=np.float64, copy=True),
        **meta,
    )


def knn_graph(pc: PointCloud, k: int) -> NeighborGraph:
    """Exact k-nearest-neighbor graph, union-symmetrized.

    Each node is linked to its k nearest points by Euclidean distance; ties
    are broken by the smaller index.  ``mean_neighbor_distance`` averages
    the n*k directed distances before symmetrization.  Duplicate points are
    allowed (zero-length edges), self edges are not.
    """
    n = pc.n
    if not 1 <= k < n:
        raise ParameterError(f"k={k} must satisfy 1 <= k < n={n}")
    points = pc.points
    sq = np.einsum("ij,ij->i", points, points)
    block = max(1, int(4_000_000 // max(n, 1)))
    nn_idx = np.empty((n, k), dtype=np.int64)
    nn_dist = np.empty((n, k))
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        d = _pairwise_block(points, sq, lo, hi)
        d[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        # stable sort on distance keeps the smaller index first among ties
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        nn_idx[lo:hi] = order
        nn_dist[lo:hi] = np.take_along_axis(d, order, axis=1)
    mean_nd = nn_dist.mean()
    src = np.repeat(np.arange(n, dtype=np.int64), k)
    return _assemble(n, src, nn_idx.ravel(), nn_dist.ravel(), points, mean_nd, k=k)


def epsilon_graph(pc: PointCloud, epsilon: float) -> NeighborGraph:
    """Exact epsilon-ball graph: edges for all pairs with distance <= epsilon.

    Alternate constructor with the same downstream contract as knn_graph.
    Nodes may end up isolated if epsilon is too small.
    """
    if epsilon <= 0:
        raise ParameterError("epsilon must be > 0")
    n = pc.n
    points = pc.points
    sq = np.einsum("ij,ij->i", points, points)
    block = max(1, int(4_000_000 // max(n, 1)))
    srcs, dsts, dists = [], [], []
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        d = _pairwise_block(points, sq, lo, hi)
        d[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        r, c = np.nonzero(d <= epsilon)
        srcs.append(r + lo)
        dsts.append(c)
        dists.append(d[r, c])
    src = np.concatenate(srcs)
    dst = np.concatenate(dsts)
    dist = np.concatenate(dists)
    if src.size == 0:
        raise ParameterError("epsilon graph has no edges; increase epsilon")
    mean_nd = dist.mean()
    return _assemble(n, src, dst, dist, points, mean_nd, epsilon=float(epsilon))


def graph_from_edges(points, edges, distances=None, weights=None) -> NeighborGraph:
    """Build a NeighborGraph from an explicit undirected edge list.

    Mainly for tests and interop; ``edges`` is a sequence of (i, j) pairs,
    ``distances`` defaults to the Euclidean distances between the points.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = points.shape[0]
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if np.any(edges < 0) or np.any(edges >= n):
        raise ParameterError("edge endpoints out of range")
    if np.any(edges[:, 0] == edges[:, 1]):
        raise ParameterError("self edges are not allowed")
    if distances is None:
        distances = np.linalg.norm(points[edges[:, 0]] - points[edges[:, 1]], axis=1)
    distances = np.asarray(distances, dtype=np.float64)
    g = _assemble(
        n, edges[:, 0], edges[:, 1], distances, points,
        distances.mean() if distances.size else 0.0,
    )
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        w_full = np.empty_like(g.distances)
        # expand per-undirected-edge weights onto the symmetric layout
        lut = {}
        for (a, b), w in zip(edges, weights):
            lut[(min(a, b), max(a, b))] = float(w)
        ptr = 0
        for i in range(n):
            for j in g.indices[g.indptr[i]:g.indptr[i + 1]]:
                w_full[ptr] = lut[(min(i, j), max(i, j))]
                ptr += 1
        g = dataclasses.replace(g, weights=w_full)
    return g


def gaussian_weights(g: NeighborGraph, bandwidth_multiplier: float = 5.0) -> NeighborGraph:
    """Assign Gaussian edge weights exp(-d^2 / sigma^2).

    The bandwidth is sigma = bandwidth_multiplier * mean_neighbor_distance.
    If every distance is zero (all points coincide) the weights degenerate
    to 1, which is valid but flagged by a zero stored bandwidth.
    """
    if bandwidth_multiplier <= 0:
        raise ParameterError("bandwidth_multiplier must be > 0")
    sigma = bandwidth_multiplier * g.mean_neighbor_distance
    if sigma == 0.0:
        weights = np.ones_like(g.distances)
    else:
        weights = np.exp(-((g.distances / sigma) ** 2))
    return dataclasses.replace(
        g,
        weights=weights,
        bandwidth=float(sigma),
        bandwidth_multiplier=float(bandwidth_multiplier),
    )


def laplacian(g: NeighborGraph) -> SparseSymmetric:
    """Unnormalized graph Laplacian L = D - W from the weighted graph."""
    if g.weights is None:
        raise ParameterError("graph has no weights; call gaussian_weights first")
    W = sp.csr_matrix((g.weights, g.indices, g.indptr), shape=(g.n, g.n))
    deg = np.asarray(W.sum(axis=1)).ravel()
    L = (sp.diags(deg) - W).tocsr()
    return SparseSymmetric.from_matrix(L)


def save_edge_list(g: NeighborGraph, path):
    """Dump the graph as edge-list CSV ``i,j,distance,weight`` (i < j)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "distance", "weight"])
        for i in range(g.n):
            for ptr in range(g.indptr[i], g.indptr[i + 1]):
                j = g.indices[ptr]
                if i < j:
                    w = g.weights[ptr] if g.weights is not None else ""
                    writer.writerow([i, j, f"{g.distances[ptr]:.17g}",
                                     f"{w:.17g}" if w != "" else ""])
