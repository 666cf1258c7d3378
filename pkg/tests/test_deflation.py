import json

import numpy as np
import pytest

from manifold_deflation import (
    NumericalError,
    ParameterError,
    PointCloud,
    VectorFieldOperator,
    baseline_le,
    deflate_embed,
    gaussian_weights,
    graph_from_edges,
    knn_graph,
    laplacian,
    linear_fit_r2,
    save_embedding,
    tde,
    vfi_debias,
)


class TestDeflateEmbed:
    def test_lambda_zero_equals_baseline_exactly(self, small_scurve_pipeline):
        pc, g, L = small_scurve_pipeline
        base = baseline_le(L, 2, seed=0)
        defl = deflate_embed(L, pc, g, 2, lam=0.0, seed=0)
        assert np.array_equal(base.coords, defl.coords)
        assert np.array_equal(base.eigenvalues, defl.eigenvalues)
        assert len(defl.fields) == 2

    def test_reproducible(self, small_scurve_pipeline):
        pc, g, L = small_scurve_pipeline
        a = deflate_embed(L, pc, g, 2, lam=3.0, seed=1)
        b = deflate_embed(L, pc, g, 2, lam=3.0, seed=1)
        assert np.array_equal(a.coords, b.coords)
        assert np.array_equal(a.eigenvalues, b.eigenvalues)

    def test_eigenvalues_nondecreasing(self, small_scurve_pipeline):
        # penalties are PSD, so the operator sequence is monotone
        pc, g, L = small_scurve_pipeline
        emb = deflate_embed(L, pc, g, 3, lam=3.0)
        assert np.all(np.diff(emb.eigenvalues) >= -1e-12)

    def test_coords_unit_norm_and_centered(self, small_scurve_pipeline):
        pc, g, L = small_scurve_pipeline
        emb = deflate_embed(L, pc, g, 2, lam=3.0)
        for j in range(emb.m):
            col = emb.coords[:, j]
            assert np.linalg.norm(col) == pytest.approx(1.0, abs=1e-10)
            assert abs(col.sum()) / np.sqrt(emb.n) <= 1e-8

    def test_penalty_suppresses_constrained_direction(self, small_scurve_pipeline):
        # sanity property: ||V_1 phi_2|| under deflation is no larger than
        # for the baseline second coordinate on the same data
        pc, g, L = small_scurve_pipeline
        defl = deflate_embed(L, pc, g, 2, lam=3.0)
        base = baseline_le(L, 2)
        V1 = defl.fields[0].matrix
        constrained = np.linalg.norm(V1 @ defl.coords[:, 1])
        unconstrained = np.linalg.norm(V1 @ base.coords[:, 1])
        assert constrained <= unconstrained

    def test_config_records_run(self, small_scurve_pipeline):
        pc, g, L = small_scurve_pipeline
        emb = deflate_embed(L, pc, g, 2, lam=3.0, refinement="project_rescale",
                            seed=5)
        cfg = emb.config
        assert cfg["lam"] == 3.0
        assert cfg["refinement"] == "project_rescale"
        assert cfg["solver"]["seed"] == 5
        assert cfg["graph"]["k"] == 15
        json.dumps(cfg)  # fully serializable

    def test_all_degenerate_field_raises(self):
        # two clusters of coincident points: the first coordinate is an
        # indicator, constant on every neighborhood, so the field vanishes
        pts = np.array([[0.0], [0.0], [0.0], [5.0], [5.0], [5.0]])
        pc = PointCloud(pts)
        g = gaussian_weights(knn_graph(pc, 2))
        L = laplacian(g)
        with pytest.warns(UserWarning, match="disconnected"):
            with pytest.raises(NumericalError, match="coordinate 1"):
                deflate_embed(L, pc, g, 2, lam=1.0)

    def test_bad_parameters(self, small_scurve_pipeline):
        pc, g, L = small_scurve_pipeline
        with pytest.raises(ParameterError):
            deflate_embed(L, pc, g, 0, lam=1.0)
        with pytest.raises(ParameterError):
            deflate_embed(L, pc, g, 2, lam=-1.0)


class TestBaseline:
    def test_path3_first_coordinate(self, path3):
        L = laplacian(path3)
        emb = baseline_le(L, 1)
        expected = np.array([1.0, 0.0, -1.0]) / np.sqrt(2)
        assert np.allclose(emb.coords[:, 0], expected, atol=1e-10)
        assert emb.fields == []

    def test_disconnected_warns_indicator(self):
        rng = np.random.default_rng(0)
        pts = np.vstack([rng.normal(0, 0.1, (25, 2)),
                         rng.normal(0, 0.1, (25, 2)) + 40.0])
        g = gaussian_weights(knn_graph(PointCloud(pts), 3))
        L = laplacian(g)
        with pytest.warns(UserWarning, match="disconnected"):
            emb = baseline_le(L, 1)
        assert emb.eigenvalues[0] == pytest.approx(0.0, abs=1e-10)


def _grid_with_central_difference(n=100):
    h = 1.0 / (n - 1)
    points = np.linspace(0.0, 1.0, n).reshape(-1, 1)
    edges = [(i, i + 1) for i in range(n - 1)]
    g = gaussian_weights(graph_from_edges(points, edges), 5.0)
    import scipy.sparse as sp

    rows, cols, vals = [], [], []
    for i in range(1, n - 1):
        rows += [i, i]
        cols += [i - 1, i + 1]
        vals += [-1.0 / (2 * h), 1.0 / (2 * h)]
    V = VectorFieldOperator(
        sp.csr_matrix((vals, (rows, cols)), shape=(n, n)),
        np.array([0, n - 1]),
    )
    return points, g, V


class TestVfi:
    def test_grid_recovers_linear_coordinate(self):
        points, g, V = _grid_with_central_difference(100)
        phi = np.cos(np.pi * points[:, 0])  # boundary-biased coordinate
        debiased = vfi_debias(phi, V, g)
        interior = slice(5, 95)
        r2 = linear_fit_r2(points[interior, 0], debiased[interior])
        assert r2 >= 0.999
        assert abs(debiased.mean()) <= 1e-10

    def test_alpha_zero_rejected(self):
        points, g, V = _grid_with_central_difference(50)
        with pytest.raises(ParameterError):
            vfi_debias(points[:, 0], V, g, alpha=0.0)

    def test_requires_bandwidth(self):
        points, g, V = _grid_with_central_difference(50)
        import dataclasses

        bare = dataclasses.replace(g, bandwidth=None)
        with pytest.raises(ParameterError):
            vfi_debias(points[:, 0], V, bare)

    def test_improves_linearity_on_scurve(self, small_scurve_pipeline):
        pc, g, L = small_scurve_pipeline
        emb = deflate_embed(L, pc, g, 1, lam=3.0)
        s = pc.truth[:, 0]
        raw_r2 = linear_fit_r2(s, emb.coords[:, 0])
        debiased = vfi_debias(emb.coords[:, 0], emb.fields[0], g)
        assert linear_fit_r2(s, debiased) > raw_r2

    def test_naive_inversion_is_meaningless_control(self, small_scurve_pipeline):
        # documented negative control: directly solving V x = 1 in the least
        # squares sense yields a far worse coordinate than the ridge path
        pc, g, L = small_scurve_pipeline
        emb = deflate_embed(L, pc, g, 1, lam=3.0)
        s = pc.truth[:, 0]
        V = emb.fields[0].matrix.toarray()
        naive, *_ = np.linalg.lstsq(V, np.ones(pc.n), rcond=None)
        debiased = vfi_debias(emb.coords[:, 0], emb.fields[0], g)
        assert linear_fit_r2(s, debiased) > linear_fit_r2(s, naive)


def test_save_embedding_round_trip(tmp_path, small_scurve_pipeline):
    pc, g, L = small_scurve_pipeline
    emb = deflate_embed(L, pc, g, 2, lam=3.0)
    csv_path = tmp_path / "emb.csv"
    save_embedding(emb, csv_path)
    header, *rows = csv_path.read_text().strip().splitlines()
    assert header == "coord_1,coord_2"
    data = np.array([[float(c) for c in r.split(",")] for r in rows])
    assert np.allclose(data, emb.coords, rtol=1e-15, atol=0)
    sidecar = json.loads((tmp_path / "emb.json").read_text())
    assert sidecar["eigenvalues"] == [float(v) for v in emb.eigenvalues]
    assert sidecar["config"]["lam"] == 3.0
