"""scikit-learn style estimator facade.

Both estimators follow the manifold-learning convention of fit /
fit_transform without out-of-sample transform (the spectral problem is
tied to the training graph).  They validate input with sklearn's
``check_array``, expose ``get_params``/``set_params`` via BaseEstimator,
and store the fitted embedding in ``embedding_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .datasets import PointCloud
from .deflation import baseline_le, deflate_embed, vfi_debias
from .errors import ParameterError
from .graph import epsilon_graph, gaussian_weights, knn_graph, laplacian


def _build_graph(pc, graph, n_neighbors, epsilon, bandwidth_multiplier):
    if graph == "knn":
        g = knn_graph(pc, n_neighbors)
    elif graph == "epsilon":
        if epsilon is None:
            raise ParameterError("graph='epsilon' requires epsilon")
        g = epsilon_graph(pc, epsilon)
    else:
        raise ParameterError(f"unknown graph kind {graph!r}")
    return gaussian_weights(g, bandwidth_multiplier)


class LaplacianEigenmaps(BaseEstimator):
    """Spectral embedding from the unnormalized graph Laplacian.

    Parameters
    ----------
    n_components : int
        Number of embedding coordinates.
    n_neighbors : int
        Neighbors for the symmetrized kNN graph.
    bandwidth_multiplier : float
        Gaussian kernel bandwidth as a multiple of the mean neighbor
        distance.
    graph : {"knn", "epsilon"}
        Neighborhood construction; ``epsilon`` uses the ``epsilon`` radius.
    tol, max_iter, random_state
        Eigensolver controls.

    Attributes
    ----------
    embedding_ : ndarray of shape (n, n_components)
    eigenvalues_ : ndarray of shape (n_components,)
    graph_ : NeighborGraph
    """

    def __init__(self, n_components=2, n_neighbors=15, bandwidth_multiplier=5.0,
                 graph="knn", epsilon=None, tol=1e-8, max_iter=5000, random_state=0):
        self.n_components = n_components
        self.n_neighbors = n_neighbors
        self.bandwidth_multiplier = bandwidth_multiplier
        self.graph = graph
        self.epsilon = epsilon
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        pc = PointCloud(X)
        g = _build_graph(pc, self.graph, self.n_neighbors, self.epsilon,
                         self.bandwidth_multiplier)
        lap = laplacian(g)
        emb = baseline_le(lap, self.n_components, tol=self.tol,
                          max_iter=self.max_iter, seed=self.random_state)
        self.graph_ = g
        self.embedding_ = emb.coords
        self.eigenvalues_ = emb.eigenvalues
        self.embedding_config_ = emb.config
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X, y).embedding_


class ManifoldDeflation(BaseEstimator):
    """Iterative deflation embedding with optional boundary debiasing.

    Each recovered coordinate induces a tangent vector field whose
    Frobenius-matched penalty ``lam * V^T V`` is added to the operator
    before the next eigenproblem.  ``debias=True`` post-processes each
    coordinate with vector field inversion.

    Parameters
    ----------
    n_components : int
    n_neighbors : int
    bandwidth_multiplier : float
    lam : float
        Penalty weight; 0 reproduces LaplacianEigenmaps exactly.
    refinement : {"project_rescale", "row_normalize", "none"}
        Field refinement policy; ``project_rescale`` suits low-dimensional
        synthetic data, ``row_normalize`` high-dimensional data.
    include_self : bool
        Whether the estimator's neighborhoods include the center point.
    debias : bool
        Apply vector field inversion to every coordinate after fitting.
    ridge_alpha : float or None
        Debiasing ridge; None picks 1e-3 * trace(K V^T V K) / n.
    graph : {"knn", "epsilon"}, epsilon : float or None
    tol, max_iter, random_state
        Eigensolver controls.

    Attributes
    ----------
    embedding_ : ndarray of shape (n, n_components)
        Final coordinates (debiased when ``debias``).
    raw_embedding_ : ndarray
        Pre-debias coordinates (== embedding_ when not debiasing).
    eigenvalues_, fields_, graph_, embedding_config_
    """

    def __init__(self, n_components=2, n_neighbors=15, bandwidth_multiplier=5.0,
                 lam=3.0, refinement="project_rescale", include_self=True,
                 debias=False, ridge_alpha=None, graph="knn", epsilon=None,
                 tol=1e-8, max_iter=5000, random_state=0):
        self.n_components = n_components
        self.n_neighbors = n_neighbors
        self.bandwidth_multiplier = bandwidth_multiplier
        self.lam = lam
        self.refinement = refinement
        self.include_self = include_self
        self.debias = debias
        self.ridge_alpha = ridge_alpha
        self.graph = graph
        self.epsilon = epsilon
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        pc = PointCloud(X)
        g = _build_graph(pc, self.graph, self.n_neighbors, self.epsilon,
                         self.bandwidth_multiplier)
        lap = laplacian(g)
        emb = deflate_embed(
            lap, pc, g, self.n_components, self.lam,
            refinement=self.refinement, include_self=self.include_self,
            tol=self.tol, max_iter=self.max_iter, seed=self.random_state,
        )
        self.graph_ = g
        self.raw_embedding_ = emb.coords
        self.eigenvalues_ = emb.eigenvalues
        self.fields_ = emb.fields
        self.embedding_config_ = dict(emb.config, debias=self.debias,
                                      ridge_alpha=self.ridge_alpha)
        if self.debias:
            cols = [
                vfi_debias(emb.coords[:, k], emb.fields[k], g, alpha=self.ridge_alpha)
                for k in range(emb.m)
            ]
            self.embedding_ = np.column_stack(cols)
        else:
            self.embedding_ = emb.coords
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X, y).embedding_
