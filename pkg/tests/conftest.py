import numpy as np
import pytest

from manifold_deflation import (
    PointCloud,
    gaussian_weights,
    generate_scurve,
    graph_from_edges,
    knn_graph,
    laplacian,
)


@pytest.fixture
def path3():
    """Path graph on 3 nodes with unit weights (the P3 micro-oracle)."""
    points = np.array([[0.0], [1.0], [2.0]])
    return graph_from_edges(points, [(0, 1), (1, 2)], weights=[1.0, 1.0])


@pytest.fixture
def grid1d():
    """Uniform 1-D grid of 9 nodes (spacing h=0.5) as a path graph."""
    n, h = 9, 0.5
    points = (np.arange(n) * h).reshape(-1, 1)
    edges = [(i, i + 1) for i in range(n - 1)]
    return graph_from_edges(points, edges, weights=[1.0] * (n - 1))


@pytest.fixture(scope="session")
def small_scurve_pipeline():
    """Noisy S-curve with hole at reduced size, graph and Laplacian."""
    pc = generate_scurve(700, hole=(1.05, 1.95, 0.3, 0.7),
                         noise_halfwidth=0.1, seed=1)
    g = gaussian_weights(knn_graph(pc, 15), 5.0)
    return pc, g, laplacian(g)


@pytest.fixture
def random_cloud():
    rng = np.random.default_rng(7)
    return PointCloud(rng.uniform(0, 1, size=(60, 3)), seed=7)
