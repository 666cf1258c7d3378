"""Sparse symmetric eigensolver and an SPD linear solver.

``smallest_nonconstant_eigenpairs`` returns the bottom eigenpairs of a PSD
operator restricted to the orthogonal complement of the constant vector
(and, optionally, further deflated directions).  The constant is deflated
by projection, never by a rank-one shift.  Small problems use a dense
Householder-basis eigendecomposition; larger ones use shift-invert Lanczos
where the inverse of the restricted operator is applied through conjugate
gradients preconditioned with a sparse LU factor of (M + eps I).

All randomness flows from the ``seed`` argument; repeated calls with the
same matrix, seed, and tolerance are bit-identical within a fixed BLAS
configuration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .errors import ConvergenceError, NumericalError, ParameterError
from .graph import SparseSymmetric

DENSE_CUTOFF = 600
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 5000


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue, unit-norm eigenvector, and achieved residual.

    The residual is ||P(M v) - lambda v|| with P the projector onto the
    deflated complement; when only the constant is deflated this equals
    the plain residual because M annihilates the constant.  The entry of
    largest magnitude is positive (ties resolved by the lowest index).
    """

    value: float
    vector: np.ndarray
    residual: float


def _fix_sign(vec):
    # ties in magnitude (within rounding) resolve to the lowest index
    mags = np.abs(vec)
    lead = int(np.flatnonzero(mags >= mags.max() * (1.0 - 1e-12))[0])
    return -vec if vec[lead] < 0 else vec


def _deflation_basis(n, orthogonal_to):
    cols = [np.full(n, 1.0 / np.sqrt(n))]
    if orthogonal_to is not None:
        for raw in orthogonal_to:
            v = np.asarray(raw, dtype=np.float64).copy()
            if v.shape != (n,):
                raise ParameterError("orthogonal_to vectors must have length n")
            for c in cols:
                v -= (c @ v) * c
            norm = np.linalg.norm(v)
            if norm < 1e-12:
                raise ParameterError("orthogonal_to contains a near-constant vector")
            cols.append(v / norm)
    return np.column_stack(cols)


def _dense_pairs(A, C, num):
    n = A.shape[0]
    # Columns C.shape[1].. of a QR of [C | I] form an orthonormal basis of
    # the complement of span(C); deterministic and exact.
    Q_full, _ = np.linalg.qr(np.column_stack([C, np.eye(n)]))
    Q = Q_full[:, C.shape[1]:n]
    B = Q.T @ (A @ Q)
    B = (B + B.T) * 0.5
    vals, vecs = np.linalg.eigh(B)
    return [(float(vals[t]), Q @ vecs[:, t]) for t in range(num)]


def _iterative_pairs(A, C, num, tol, max_iter, seed):
    n = A.shape[0]

    def project(v):
        return v - C @ (C.T @ v)

    diag_scale = float(np.abs(A.diagonal()).mean())
    eps = 1e-6 * diag_scale if diag_scale > 0 else 1e-12
    lu = sla.splu((A + eps * sp.identity(n, format="csr")).tocsc())
    restricted = sla.LinearOperator(
        (n, n), matvec=lambda v: project(A @ project(v)) + eps * v, dtype=np.float64
    )
    precond = sla.LinearOperator(
        (n, n), matvec=lambda v: project(lu.solve(project(v))), dtype=np.float64
    )

    def inv_matvec(b):
        x, _ = sla.cg(restricted, project(b), rtol=1e-12, atol=0.0,
                      M=precond, maxiter=min(n, 1000))
        return project(x)

    T = sla.LinearOperator((n, n), matvec=inv_matvec, dtype=np.float64)
    v0 = project(np.random.RandomState(seed).standard_normal(n))
    try:
        tvals, tvecs = sla.eigsh(T, k=num, which="LA", v0=v0,
                                 tol=1e-12, maxiter=max_iter)
    except sla.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"eigensolver did not converge within {max_iter} iterations"
        ) from exc
    order = np.argsort(tvals)[::-1]
    return [(None, project(tvecs[:, t])) for t in order[:num]]


def smallest_nonconstant_eigenpairs(
    m: SparseSymmetric,
    num: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    orthogonal_to=None,
) -> list[EigenPair]:
    """Bottom ``num`` eigenpairs of ``m`` restricted to span{1, ...}^perp.

    Parameters
    ----------
    m : SparseSymmetric
        PSD operator (within numerical tolerance).
    num : int
        Number of eigenpairs, ascending by eigenvalue.
    tol : float
        Residual bound each returned pair must satisfy.
    max_iter : int
        Iteration budget; exceeding it raises ConvergenceError carrying the
        best residual achieved.
    seed : int
        Seed for the deterministic start vector.
    orthogonal_to : sequence of n-vectors, optional
        Additional directions deflated by projection (the deflation loop
        passes previously recovered coordinates here).

    Near-zero eigenvalues orthogonal to the constant indicate a
    disconnected graph; they are returned as legitimate pairs with a
    warning.
    """
    A = m.matrix
    n = A.shape[0]
    n_orth = 0 if orthogonal_to is None else len(list(orthogonal_to))
    if num < 1:
        raise ParameterError("num must be >= 1")
    if num >= n - n_orth:
        raise ParameterError(f"num={num} too large for n={n} with {n_orth} deflated vectors")
    C = _deflation_basis(n, orthogonal_to)

    if n <= DENSE_CUTOFF:
        raw = _dense_pairs(A.toarray(), C, num)
    else:
        raw = _iterative_pairs(A, C, num, tol, max_iter, seed)

    def project(v):
        return v - C @ (C.T @ v)

    pairs = []
    worst = 0.0
    for _, vec in raw:
        vec = project(vec)
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise NumericalError("eigensolver returned a vector in the deflated span")
        vec = vec / norm
        value = float(vec @ (A @ vec))
        residual = float(np.linalg.norm(project(A @ vec) - value * vec))
        worst = max(worst, residual)
        pairs.append(EigenPair(value, _fix_sign(vec), residual))
    if worst > tol:
        raise ConvergenceError(
            f"eigenpair residual {worst:.3e} exceeds tol {tol:.3e}",
            best_residual=worst,
        )
    pairs.sort(key=lambda p: p.value)
    zero_scale = 1e-8 * (float(np.abs(A.diagonal()).mean()) or 1.0)
    if any(p.value < zero_scale for p in pairs):
        warnings.warn(
            "near-zero eigenvalue orthogonal to the constant: the graph is "
            "disconnected and the embedding is degenerate",
            stacklevel=2,
        )
    return pairs


def solve_spd(a, b, tol: float = 1e-10, max_iter: int = 10000) -> np.ndarray:
    """Solve a x = b for symmetric positive-definite ``a``.

    Dense inputs use a Cholesky factorization; sparse inputs use conjugate
    gradients.  The result satisfies ||a x - b|| <= tol * ||b||, otherwise
    a ConvergenceError (iterative) or NumericalError (direct) is raised
    with the achieved residual.
    """
    if isinstance(a, SparseSymmetric):
        a = a.matrix
    b = np.asarray(b, dtype=np.float64).ravel()
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b)
    if sp.issparse(a):
        x, info = sla.cg(sp.csr_matrix(a), b, rtol=tol, atol=0.0, maxiter=max_iter)
        residual = float(np.linalg.norm(a @ x - b))
        if info != 0 or residual > tol * b_norm:
            raise ConvergenceError(
                f"cg residual {residual:.3e} exceeds {tol:.1e} * ||b||",
                best_residual=residual,
            )
        return x
    a = np.asarray(a, dtype=np.float64)
    try:
        factor = scipy.linalg.cho_factor(a, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"matrix is not positive definite: {exc}") from exc
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    residual = float(np.linalg.norm(a @ x - b))
    if residual > tol * b_norm:
        raise NumericalError(
            f"direct solve residual {residual:.3e} exceeds {tol:.1e} * ||b||"
        )
    return x
