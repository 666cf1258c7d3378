"""Tangent vector field estimation and the deflation penalty.

The core estimator turns a scalar coordinate into a sparse directional
derivative operator: row i regresses a function's neighborhood values on
the coordinate's neighborhood values, giving

    row_i = (phi_A - mean(phi_A)) / ||phi_A - mean(phi_A)||^2

on the closed neighborhood A of i.  Two refinements correct curvature and
scale, a third simply normalizes rows for high-dimensional data, and
``penalty`` assembles the Frobenius-matched positive-semidefinite term
added to the embedding operator after each recovered coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .datasets import PointCloud
from .errors import ParameterError
from .graph import NeighborGraph, SparseSymmetric

DEGENERACY_REL_TOL = 1e-12
RESCALE_ABS_TOL = 1e-14
PROJECT_RANK_REL_TOL = 1e-10


@dataclass(frozen=True)
class VectorFieldOperator:
    """Sparse n x n directional-derivative estimator.

    Row i is supported on the closed neighborhood of node i; non-degenerate
    rows sum to zero (so V @ 1 == 0), and rows listed in
    ``degenerate_rows`` are exactly zero.
    """

    matrix: sp.csr_matrix
    degenerate_rows: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def is_zero(self) -> bool:
        return self.matrix.nnz == 0 or not np.any(self.matrix.data)


def _closed_neighborhoods(g: NeighborGraph, include_self: bool):
    """Per-row column indices (CSR layout) of the TDE neighborhoods."""
    counts = np.diff(g.indptr)
    if include_self:
        counts = counts + 1
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    cols = np.empty(indptr[-1], dtype=np.int64)
    for i in range(g.n):
        lo, hi = indptr[i], indptr[i + 1]
        nb = g.indices[g.indptr[i]:g.indptr[i + 1]]
        if include_self:
            cols[lo:hi - 1] = nb
            cols[hi - 1] = i
        else:
            cols[lo:hi] = nb
    return indptr, cols


def tde(phi, g: NeighborGraph, include_self: bool = True) -> VectorFieldOperator:
    """Tangent Derivation Estimator for the field induced by ``phi``.

    Rows whose centered neighborhood values have squared norm below
    1e-12 * max(|phi|)^2 are zeroed and reported in ``degenerate_rows``
    (a constant coordinate yields an all-degenerate, all-zero operator).
    Degeneracy is reported, never fatal.
    """
    phi = np.asarray(phi, dtype=np.float64).ravel()
    if phi.size != g.n:
        raise ParameterError("phi length must equal the number of graph nodes")
    if not np.all(np.isfinite(phi)):
        raise ParameterError("phi contains non-finite entries")
    indptr, cols = _closed_neighborhoods(g, include_self)
    counts = np.diff(indptr)
    vals = phi[cols]
    # segment means / squared norms via reduceat (all segments non-empty
    # when include_self is on; empty ones are flagged degenerate below)
    nonempty = counts > 0
    sums = np.zeros(g.n)
    sums[nonempty] = np.add.reduceat(vals, indptr[:-1][nonempty])
    means = np.zeros(g.n)
    means[nonempty] = sums[nonempty] / counts[nonempty]
    centered = vals - np.repeat(means, counts)
    sq = np.zeros(g.n)
    sq[nonempty] = np.add.reduceat(centered * centered, indptr[:-1][nonempty])
    threshold = DEGENERACY_REL_TOL * float(np.max(np.abs(phi))) ** 2
    degenerate = (sq <= threshold) | (sq == 0.0) | ~nonempty
    # keep rows' full closed-neighborhood support (explicit zeros included)
    # so the refinements see the same neighborhood J; degenerate rows are
    # dropped entirely and stay structurally empty.
    keep = ~np.repeat(degenerate, counts)
    data = centered[keep] / np.repeat(sq, counts)[keep]
    row_ids = np.repeat(np.arange(g.n), counts)[keep]
    V = sp.csr_matrix((data, (row_ids, cols[keep])), shape=(g.n, g.n))
    V.sort_indices()
    return VectorFieldOperator(V, np.flatnonzero(degenerate))


def _row_slices(v: VectorFieldOperator):
    m = v.matrix
    for i in range(v.n):
        lo, hi = m.indptr[i], m.indptr[i + 1]
        if hi > lo:
            yield i, m.indices[lo:hi], slice(lo, hi)


def refine_project(v: VectorFieldOperator, pc: PointCloud, g: NeighborGraph) -> VectorFieldOperator:
    """Project each row onto the span of its centered neighbor displacements.

    For row i with support J the displacement block is Y_J - Y_i; its
    columns are re-centered over the support before projecting so zero-sum
    rows stay zero-sum.  Rank deficiency keeps only directions with
    singular value above 1e-10 of the largest.  Idempotent.
    """
    if pc.n != v.n:
        raise ParameterError("point cloud and operator sizes differ")
    m = v.matrix.copy()
    pts = pc.points
    for i, cols, sl in _row_slices(v):
        Y = pts[cols] - pts[i]
        Y = Y - Y.mean(axis=0)
        U, sv, _ = np.linalg.svd(Y, full_matrices=False)
        if sv.size == 0 or sv[0] == 0.0:
            continue
        keep = sv > PROJECT_RANK_REL_TOL * sv[0]
        Uk = U[:, keep]
        m.data[sl] = Uk @ (Uk.T @ m.data[sl])
    return VectorFieldOperator(m, v.degenerate_rows.copy())


def refine_rescale(v: VectorFieldOperator, pc: PointCloud, g: NeighborGraph) -> VectorFieldOperator:
    """Scale each row so its gain on the neighbor displacements is one.

    Enforces ||row_i @ (Y_J - 1 Y_i)|| = 1 per non-degenerate row; rows
    with gain below 1e-14 are zeroed and added to ``degenerate_rows``.
    """
    if pc.n != v.n:
        raise ParameterError("point cloud and operator sizes differ")
    m = v.matrix.copy()
    pts = pc.points
    newly_degenerate = []
    for i, cols, sl in _row_slices(v):
        Y = pts[cols] - pts[i]
        gain = np.linalg.norm(m.data[sl] @ Y)
        if gain < RESCALE_ABS_TOL:
            m.data[sl] = 0.0
            newly_degenerate.append(i)
        else:
            m.data[sl] /= gain
    degen = np.union1d(v.degenerate_rows, np.asarray(newly_degenerate, dtype=np.int64))
    return VectorFieldOperator(m, degen)


def row_normalize(v: VectorFieldOperator) -> VectorFieldOperator:
    """Scale every non-zero row to unit Euclidean norm (high-dim preset)."""
    m = v.matrix.copy()
    for i, cols, sl in _row_slices(v):
        norm = np.linalg.norm(m.data[sl])
        if norm > 0:
            m.data[sl] /= norm
    return VectorFieldOperator(m, v.degenerate_rows.copy())


REFINEMENTS = ("project_rescale", "row_normalize", "none")


def apply_refinement(v: VectorFieldOperator, pc: PointCloud, g: NeighborGraph,
                     policy: str) -> VectorFieldOperator:
    """Run the named refinement chain on a raw estimator."""
    if policy == "project_rescale":
        return refine_rescale(refine_project(v, pc, g), pc, g)
    if policy == "row_normalize":
        return row_normalize(v)
    if policy == "none":
        return v
    raise ParameterError(f"unknown refinement policy {policy!r}; use one of {REFINEMENTS}")


def penalty(v: VectorFieldOperator, l: SparseSymmetric) -> SparseSymmetric:
    """Frobenius-matched deflation penalty P = c * V^T V with ||P||_F = ||L||_F.

    P is positive semidefinite and its sparsity pattern is contained in the
    pairs at graph distance <= 2 (row supports overlap only within two
    hops).  A zero field cannot be scaled and raises ParameterError.
    """
    if v.n != l.n:
        raise ParameterError("operator and Laplacian sizes differ")
    if v.is_zero():
        raise ParameterError("cannot scale the penalty of an all-zero field")
    P = (v.matrix.T @ v.matrix).tocsr()
    P = ((P + P.T) * 0.5).tocsr()
    P.sum_duplicates()
    P.eliminate_zeros()
    pf = float(np.sqrt(np.sum(P.data * P.data)))
    return SparseSymmetric.from_matrix(P * (l.frobenius_norm / pf))


def save_triplets(v: VectorFieldOperator, path):
    """Dump the operator as sparse triplet CSV ``i,j,value``."""
    coo = v.matrix.tocoo()
    with open(path, "w", newline="") as fh:
        fh.write("i,j,value\n")
        for i, j, val in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i},{j},{val:.17g}\n")
