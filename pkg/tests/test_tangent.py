import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manifold_deflation import (
    ParameterError,
    PointCloud,
    apply_refinement,
    gaussian_weights,
    graph_from_edges,
    knn_graph,
    laplacian,
    penalty,
    refine_project,
    refine_rescale,
    row_normalize,
    save_triplets,
    tde,
)


def row_dense(v, i):
    return np.asarray(v.matrix.getrow(i).todense()).ravel()


@pytest.fixture
def weighted_cloud_graph(random_cloud):
    return random_cloud, gaussian_weights(knn_graph(random_cloud, 6))


class TestTde:
    def test_constant_coordinate_fully_degenerate(self, grid1d):
        v = tde(np.full(grid1d.n, 3.7), grid1d)
        assert len(v.degenerate_rows) == grid1d.n
        assert v.matrix.nnz == 0

    def test_grid_central_difference(self, grid1d):
        h = 0.5
        phi = grid1d.points[:, 0].copy()
        v = tde(phi, grid1d)
        i = 4  # interior node, neighborhood {3, 4, 5}
        row = row_dense(v, i)
        expected = np.zeros(grid1d.n)
        expected[i - 1], expected[i + 1] = -1 / (2 * h), 1 / (2 * h)
        assert np.allclose(row, expected, atol=1e-10)
        vf = v.matrix @ phi
        interior = np.arange(1, grid1d.n - 1)
        assert np.allclose(vf[interior], 1.0, atol=1e-10)

    def test_rows_annihilate_constants(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        v = tde(pc.points[:, 0], g)
        out = v.matrix @ np.full(g.n, 4.2)
        assert np.max(np.abs(out)) <= 1e-10

    def test_row_support_in_closed_neighborhood(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        v = tde(pc.points[:, 1], g)
        for i in range(g.n):
            support = set(v.matrix.indices[v.matrix.indptr[i]:v.matrix.indptr[i + 1]])
            allowed = set(g.neighbors(i)) | {i}
            assert support <= allowed

    def test_translation_invariance_exact_for_dyadic(self, grid1d):
        phi = grid1d.points[:, 0] * 2.0  # dyadic values
        a = tde(phi, grid1d)
        b = tde(phi + 4.0, grid1d)
        assert np.array_equal(a.matrix.toarray(), b.matrix.toarray())

    def test_scale_covariance_exact_for_powers_of_two(self, grid1d):
        phi = grid1d.points[:, 0].copy()
        a = tde(phi, grid1d)
        b = tde(4.0 * phi, grid1d)
        assert np.array_equal(4.0 * b.matrix.toarray(), a.matrix.toarray())

    @settings(max_examples=25, deadline=None)
    @given(shift=st.floats(-100, 100, allow_nan=False),
           scale=st.floats(0.01, 100, allow_nan=False))
    def test_invariance_properties_approximate(self, shift, scale):
        rng = np.random.default_rng(0)
        points = rng.uniform(0, 1, size=(40, 2))
        g = knn_graph(PointCloud(points), 5)
        phi = points[:, 0]
        base = tde(phi, g).matrix.toarray()
        shifted = tde(phi + shift, g).matrix.toarray()
        scaled = tde(scale * phi, g).matrix.toarray()
        assert np.allclose(shifted, base, rtol=1e-6, atol=1e-9 * np.abs(base).max())
        assert np.allclose(scale * scaled, base, rtol=1e-9,
                           atol=1e-12 * np.abs(base).max())

    def test_exclude_self_option(self, grid1d):
        phi = grid1d.points[:, 0].copy()
        v = tde(phi, grid1d, include_self=False)
        i = 4
        support = set(v.matrix.indices[v.matrix.indptr[i]:v.matrix.indptr[i + 1]])
        assert support == {i - 1, i + 1}


class TestRefinements:
    def test_project_leaves_row_in_span_unchanged(self):
        # 1-D grid embedded along the x axis of R^3
        n, h = 9, 0.5
        points = np.zeros((n, 3))
        points[:, 0] = np.arange(n) * h
        g = graph_from_edges(points, [(i, i + 1) for i in range(n - 1)])
        pc = PointCloud(points)
        v = tde(points[:, 0], g)
        before = v.matrix.toarray()
        after = refine_project(v, pc, g).matrix.toarray()
        assert np.allclose(before, after, atol=1e-10)

    def test_project_idempotent(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        v = tde(pc.points[:, 0] + 0.3 * pc.points[:, 1], g)
        once = refine_project(v, pc, g)
        twice = refine_project(once, pc, g)
        assert np.allclose(once.matrix.toarray(), twice.matrix.toarray(), atol=1e-10)

    def test_project_preserves_zero_row_sums(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        v = refine_project(tde(pc.points[:, 2], g), pc, g)
        sums = np.asarray(v.matrix.sum(axis=1)).ravel()
        scale = np.abs(v.matrix.data).max()
        assert np.max(np.abs(sums)) <= 1e-10 * scale

    def test_rescale_enforces_unit_gain(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        v = refine_rescale(tde(pc.points[:, 0], g), pc, g)
        degenerate = set(v.degenerate_rows)
        for i in range(g.n):
            if i in degenerate:
                continue
            cols = v.matrix.indices[v.matrix.indptr[i]:v.matrix.indptr[i + 1]]
            row = v.matrix.data[v.matrix.indptr[i]:v.matrix.indptr[i + 1]]
            gain = np.linalg.norm(row @ (pc.points[cols] - pc.points[i]))
            assert gain == pytest.approx(1.0, abs=1e-10)

    def test_rescale_grid_scale_factor_is_one(self):
        n, h = 9, 0.5
        points = np.zeros((n, 3))
        points[:, 0] = np.arange(n) * h
        g = graph_from_edges(points, [(i, i + 1) for i in range(n - 1)])
        pc = PointCloud(points)
        v = tde(points[:, 0], g)
        r = refine_rescale(v, pc, g)
        i = 4
        assert np.allclose(row_dense(r, i), row_dense(v, i), atol=1e-12)

    def test_rescale_flags_zero_rows(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        v = tde(np.ones(g.n), g)  # fully degenerate
        r = refine_rescale(v, pc, g)
        assert len(r.degenerate_rows) == g.n
        assert not np.any(r.matrix.toarray())

    def test_row_normalize(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        v = row_normalize(tde(pc.points[:, 0], g))
        m = v.matrix
        for i in range(g.n):
            row = m.data[m.indptr[i]:m.indptr[i + 1]]
            if row.size and np.any(row):
                assert np.linalg.norm(row) == pytest.approx(1.0, abs=1e-12)
        again = row_normalize(v)
        assert np.allclose(v.matrix.toarray(), again.matrix.toarray(), atol=1e-15)

    def test_unknown_policy(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        v = tde(pc.points[:, 0], g)
        with pytest.raises(ParameterError):
            apply_refinement(v, pc, g, "bogus")


class TestPenalty:
    def test_frobenius_matched_and_psd(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        L = laplacian(g)
        v = apply_refinement(tde(pc.points[:, 0], g), pc, g, "project_rescale")
        P = penalty(v, L)
        assert P.frobenius_norm == pytest.approx(L.frobenius_norm, rel=1e-10)
        rng = np.random.default_rng(1)
        for _ in range(10):
            x = rng.standard_normal(g.n)
            assert x @ (P.matrix @ x) >= -1e-10 * L.frobenius_norm

    def test_two_hop_support(self, weighted_cloud_graph):
        import scipy.sparse as sp

        pc, g = weighted_cloud_graph
        L = laplacian(g)
        v = apply_refinement(tde(pc.points[:, 0], g), pc, g, "project_rescale")
        P = penalty(v, L)
        adj = sp.csr_matrix(
            (np.ones_like(g.distances), g.indices, g.indptr), shape=(g.n, g.n)
        ) + sp.identity(g.n)
        two_hop = (adj @ adj).astype(bool).toarray()
        pattern = P.matrix.toarray() != 0
        assert not np.any(pattern & ~two_hop)

    def test_zero_field_rejected(self, weighted_cloud_graph):
        pc, g = weighted_cloud_graph
        L = laplacian(g)
        v = tde(np.ones(g.n), g)
        with pytest.raises(ParameterError):
            penalty(v, L)


def test_triplet_dump(tmp_path, grid1d):
    v = tde(grid1d.points[:, 0], grid1d)
    path = tmp_path / "v.csv"
    save_triplets(v, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "i,j,value"
    assert len(lines) - 1 == v.matrix.nnz
