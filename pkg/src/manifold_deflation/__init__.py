"""Manifold deflation: iterative spectral embedding with tangent-field
penalties, plus vector field inversion for boundary debiasing."""

from .datasets import (
    DEFAULT_HOLE,
    STRIP_LENGTHS,
    PointCloud,
    generate_box,
    generate_scurve,
    generate_sphere_fibonacci,
    load_csv,
    save_csv,
    scurve_surface,
)
from .deflation import Embedding, baseline_le, deflate_embed, save_embedding, vfi_debias
from .errors import ConvergenceError, NumericalError, ParameterError, ParseError
from .estimators import LaplacianEigenmaps, ManifoldDeflation
from .evaluation import (
    MetricReport,
    correlation,
    eigenfunction_match,
    interior_mask,
    linear_fit_r2,
    save_width_spans,
    sphere_polar_scores,
    width_spans,
    width_uniformity,
)
from .graph import (
    NeighborGraph,
    SparseSymmetric,
    epsilon_graph,
    gaussian_weights,
    graph_from_edges,
    knn_graph,
    laplacian,
    save_edge_list,
)
from .solver import EigenPair, smallest_nonconstant_eigenpairs, solve_spd
from .tangent import (
    VectorFieldOperator,
    apply_refinement,
    penalty,
    refine_project,
    refine_rescale,
    row_normalize,
    save_triplets,
    tde,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_HOLE",
    "STRIP_LENGTHS",
    "PointCloud",
    "NeighborGraph",
    "SparseSymmetric",
    "VectorFieldOperator",
    "EigenPair",
    "Embedding",
    "MetricReport",
    "LaplacianEigenmaps",
    "ManifoldDeflation",
    "ParameterError",
    "ParseError",
    "NumericalError",
    "ConvergenceError",
    "generate_scurve",
    "generate_sphere_fibonacci",
    "generate_box",
    "scurve_surface",
    "load_csv",
    "save_csv",
    "knn_graph",
    "epsilon_graph",
    "graph_from_edges",
    "gaussian_weights",
    "laplacian",
    "save_edge_list",
    "tde",
    "refine_project",
    "refine_rescale",
    "row_normalize",
    "apply_refinement",
    "penalty",
    "save_triplets",
    "smallest_nonconstant_eigenpairs",
    "solve_spd",
    "deflate_embed",
    "baseline_le",
    "vfi_debias",
    "save_embedding",
    "correlation",
    "linear_fit_r2",
    "width_uniformity",
    "width_spans",
    "save_width_spans",
    "eigenfunction_match",
    "sphere_polar_scores",
    "interior_mask",
]
