"""The deflation loop, the plain spectral baseline, and boundary debiasing.

``deflate_embed`` recovers coordinates one at a time: after each new
coordinate, its estimated tangent field contributes a Frobenius-matched
penalty lam * V_k^T V_k to the operator, steering later eigenproblems away
from directions already explained.  Each solve is additionally deflated
against the previously recovered coordinates, so with lam = 0 the loop
collapses exactly onto the spectral baseline.

``vfi_debias`` removes boundary bias from a single coordinate by solving
the kernel ridge regression  1 = V phi + eps  in a Gaussian RKHS built
from the graph's bandwidth.  Naive direct inversion of V (e.g. a
least-squares solve of V x = 1) is *not* offered: the limit operator is
not invertible and naive inversion yields meaningless embeddings; it
exists in the test suite only as a negative control.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import PointCloud
from .errors import NumericalError, ParameterError
from .graph import NeighborGraph, SparseSymmetric
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL, smallest_nonconstant_eigenpairs, solve_spd
from .tangent import VectorFieldOperator, apply_refinement, penalty, tde


@dataclass(frozen=True)
class Embedding:
    """Ordered embedding coordinates with their provenance.

    ``coords`` has one column per coordinate (unit norm, orthogonal to the
    constant within solver tolerance); ``fields`` holds the refined vector
    field estimated from each coordinate and is empty for the baseline.
    ``config`` records every parameter needed to reproduce the run.
    """

    coords: np.ndarray
    eigenvalues: np.ndarray
    fields: list[VectorFieldOperator] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2:
            raise ParameterError("coords must be an (n, m) array")
        object.__setattr__(self, "coords", coords)
        vals = np.asarray(self.eigenvalues, dtype=np.float64).ravel()
        if vals.size != coords.shape[1]:
            raise ParameterError("eigenvalues must match the number of coordinates")
        object.__setattr__(self, "eigenvalues", vals)
        if self.fields and len(self.fields) != coords.shape[1]:
            raise ParameterError("fields must be empty or match the coordinates")

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return self.coords.shape[1]


def _graph_config(g: NeighborGraph) -> dict:
    return {
        "kind": "knn" if g.k is not None else "epsilon",
        "k": g.k,
        "epsilon": g.epsilon,
        "bandwidth_multiplier": g.bandwidth_multiplier,
        "bandwidth": g.bandwidth,
        "kernel": "exp(-d^2/sigma^2)",
    }


def baseline_le(
    l: SparseSymmetric,
    m: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> Embedding:
    """Bottom ``m`` non-constant eigenvectors of L, in eigenvalue order."""
    if m < 1:
        raise ParameterError("m must be >= 1")
    pairs = smallest_nonconstant_eigenpairs(l, m, tol=tol, max_iter=max_iter, seed=seed)
    coords = np.column_stack([p.vector for p in pairs])
    vals = np.array([p.value for p in pairs])
    config = {
        "method": "baseline",
        "m": m,
        "solver": {"tol": tol, "max_iter": max_iter, "seed": seed,
                   "algorithm": "shift-invert-lanczos-cg"},
    }
    return Embedding(coords, vals, [], config)


def deflate_embed(
    l: SparseSymmetric,
    pc: PointCloud,
    g: NeighborGraph,
    m: int,
    lam: float,
    refinement: str = "project_rescale",
    include_self: bool = True,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> Embedding:
    """Iterative deflation embedding with ``m`` coordinates.

    Starting from M_1 = L, coordinate k is the smallest non-constant
    eigenvector of M_k (deflated against coordinates 1..k-1), its refined
    tangent field V_k is estimated, and M_{k+1} = M_k + lam * penalty(V_k)
    where the penalty is Frobenius-matched to L.  With lam = 0 the loop
    collapses to ``baseline_le`` exactly; the fields are still estimated
    and recorded.

    Raises
    ------
    NumericalError
        If a solver fails (the coordinate index is named) or a recovered
        coordinate produces an all-degenerate field.
    """
    if m < 1:
        raise ParameterError("m must be >= 1")
    if lam < 0:
        raise ParameterError("lam must be >= 0")
    if pc.n != l.n or g.n != l.n:
        raise ParameterError("point cloud, graph, and Laplacian sizes differ")

    config = {
        "method": "deflation",
        "m": m,
        "lam": lam,
        "refinement": refinement,
        "include_self": include_self,
        "dataset_seed": pc.seed,
        "graph": _graph_config(g),
        "solver": {"tol": tol, "max_iter": max_iter, "seed": seed,
                   "algorithm": "shift-invert-lanczos-cg"},
    }

    def estimate_field(phi, k):
        v = tde(phi, g, include_self=include_self)
        v = apply_refinement(v, pc, g, refinement)
        if v.is_zero():
            raise NumericalError(f"coordinate {k}: vector field is entirely degenerate")
        return v

    if lam == 0.0:
        base = baseline_le(l, m, tol=tol, max_iter=max_iter, seed=seed)
        fields = [estimate_field(base.coords[:, k], k + 1) for k in range(m)]
        return Embedding(base.coords, base.eigenvalues, fields, config)

    coords, vals, fields = [], [], []
    mat = l
    for k in range(1, m + 1):
        try:
            pair = smallest_nonconstant_eigenpairs(
                mat, 1, tol=tol, max_iter=max_iter, seed=seed, orthogonal_to=coords
            )[0]
        except NumericalError as exc:
            raise NumericalError(f"coordinate {k}: {exc}") from exc
        phi = pair.vector
        v = estimate_field(phi, k)
        coords.append(phi)
        vals.append(pair.value)
        fields.append(v)
        if k < m:
            p = penalty(v, l)
            mat = SparseSymmetric.from_matrix(mat.matrix + lam * p.matrix)
    return Embedding(np.column_stack(coords), np.array(vals), fields, config)


def _dense_kernel(points, sigma):
    sq = np.einsum("ij,ij->i", points, points)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (sigma * sigma))


def vfi_debias(phi, v: VectorFieldOperator, g: NeighborGraph, alpha: float | None = None) -> np.ndarray:
    """Vector Field Inversion: debias a coordinate via kernel ridge regression.

    Solves  phi~ = K (K V^T V K + alpha I)^{-1} K V^T 1  with K the dense
    Gaussian kernel at the graph's bandwidth, then mean-centers the result.
    ``alpha`` defaults to 1e-3 * trace(K V^T V K) / n; alpha <= 0 is a
    parameter error because the unregularized problem is not invertible.
    """
    phi = np.asarray(phi, dtype=np.float64).ravel()
    n = g.n
    if phi.size != n or v.n != n:
        raise ParameterError("phi, field, and graph sizes differ")
    if g.bandwidth is None or g.bandwidth <= 0:
        raise ParameterError("graph has no positive bandwidth; call gaussian_weights first")
    K = _dense_kernel(g.points, g.bandwidth)
    S = v.matrix @ K                      # (V K), dense
    G = S.T @ S                           # K V^T V K, symmetric PSD
    if alpha is None:
        alpha = 1e-3 * float(np.trace(G)) / n
    if alpha <= 0:
        raise ParameterError("alpha must be > 0 (naive inversion is not meaningful)")
    A = G + alpha * np.eye(n)
    rhs = K @ (v.matrix.T @ np.ones(n))
    coef = solve_spd(A, rhs)
    out = K @ coef
    return out - out.mean()


def save_embedding(emb: Embedding, csv_path, json_path=None):
    """Write coords as CSV (coord_1..coord_m) plus a JSON config sidecar."""
    import csv as _csv
    import json
    from pathlib import Path

    csv_path = Path(csv_path)
    if json_path is None:
        json_path = csv_path.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow([f"coord_{j + 1}" for j in range(emb.m)])
        for row in emb.coords:
            writer.writerow([f"{val:.17g}" for val in row])
    sidecar = {
        "eigenvalues": [float(v) for v in emb.eigenvalues],
        "config": emb.config,
        "degenerate_rows": [
            [int(i) for i in f.degenerate_rows] for f in emb.fields
        ],
    }
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
