"""Command-line interface: generate -> embed -> evaluate -> export-plot.

Every run is driven by a RunConfig; flags override config-file values and
the effective config is emitted as a JSON sidecar next to each output, so
any run can be reproduced exactly from its own sidecar.  Exit codes:
0 success, 2 parameter/parse error, 3 numerical failure.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import datasets as ds
from . import deflation as dfl
from . import evaluation as ev
from .config import RunConfig
from .errors import NumericalError, ParameterError, ParseError
from .graph import epsilon_graph, gaussian_weights, knn_graph, laplacian


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ParameterError, ParseError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except NumericalError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(3)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _limit_threads(ctx):
    threads = ctx.obj.get("threads") if ctx.obj else None
    if threads:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=threads)
    import contextlib

    return contextlib.nullcontext()


@click.group()
@click.option("--threads", type=int, default=None, help="Cap BLAS/LAPACK threads.")
@click.pass_context
def main(ctx, threads):
    """Manifold deflation pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


def _sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_hole(text):
    if text is None or text == "none":
        return None
    if text == "default":
        return list(ds.DEFAULT_HOLE)
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ParameterError(f"bad hole spec {text!r}") from None
    if len(vals) != 4:
        raise ParameterError("hole expects 4 comma-separated numbers or 'default'/'none'")
    return vals


def _parse_lengths(text):
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ParameterError(f"bad lengths spec {text!r}") from None
    if len(vals) != 3:
        raise ParameterError("lengths expects 3 comma-separated numbers")
    return vals


def _generate_cloud(spec) -> ds.PointCloud:
    if spec.name == "scurve":
        hole = spec.hole
        if hole == "default":
            hole = list(ds.DEFAULT_HOLE)
        return ds.generate_scurve(spec.n, hole=hole, noise_halfwidth=spec.noise,
                                  seed=spec.seed)
    if spec.name == "sphere":
        return ds.generate_sphere_fibonacci(spec.n, stretch_ns=spec.stretch_ns,
                                            stretch_ew=spec.stretch_ew)
    if spec.name == "box":
        lengths = spec.lengths if spec.lengths is not None else list(ds.STRIP_LENGTHS)
        return ds.generate_box(spec.n, lengths, seed=spec.seed)
    raise ParameterError(f"unknown dataset {spec.name!r}")


@main.command()
@click.option("--dataset", "name", type=click.Choice(["scurve", "sphere", "box"]),
              required=True)
@click.option("--n", type=int, default=3000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True,
              help="Noise cube half-width (scurve).")
@click.option("--hole", type=str, default=None,
              help="scurve hole: 'default', 'none', or s0,s1,w0,w1.")
@click.option("--lengths", type=str, default=None, help="box side lengths a,b,c.")
@click.option("--stretch-ns", type=float, default=1.0, show_default=True)
@click.option("--stretch-ew", type=float, default=1.02, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_context
@_handle_errors
def generate(ctx, name, n, seed, noise, hole, lengths, stretch_ns, stretch_ew, out):
    """Generate a synthetic dataset CSV plus its config sidecar."""
    cfg = RunConfig()
    cfg.dataset = dataclasses.replace(
        cfg.dataset, name=name, n=n, seed=seed, noise=noise,
        hole=_parse_hole(hole), lengths=_parse_lengths(lengths),
        stretch_ns=stretch_ns, stretch_ew=stretch_ew, path=str(out),
    )
    with _limit_threads(ctx):
        pc = _generate_cloud(cfg.dataset)
        ds.save_csv(pc, out)
    _write_json(_sidecar(out), {"config": cfg.to_dict(), "rows": pc.n})
    click.echo(f"wrote {pc.n} points to {out}")


def _load_dataset(path):
    pc = ds.load_csv(path)
    sidecar = _sidecar(path)
    name = None
    if sidecar.exists():
        with open(sidecar) as fh:
            payload = json.load(fh)
        name = payload.get("config", {}).get("dataset", {}).get("name")
    return pc, name


def _merged_config(config_path, **overrides) -> RunConfig:
    if config_path:
        with open(config_path) as fh:
            payload = json.load(fh)
        # accept both a bare RunConfig and an emitted sidecar wrapping one
        if isinstance(payload, dict) and "config" in payload:
            payload = payload["config"]
        cfg = RunConfig.from_dict(payload)
    else:
        cfg = RunConfig()
    for section_field, value in overrides.items():
        if value is None:
            continue
        section, field_name = section_field.split(".", 1)
        obj = getattr(cfg, section)
        setattr(obj, field_name, value)
    return cfg


@main.command()
@click.option("--in", "input_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="RunConfig JSON; flags win over file values.")
@click.option("--method", type=click.Choice(["baseline", "deflation"]), default=None)
@click.option("--m", type=int, default=None, help="Number of coordinates.")
@click.option("--lambda", "lam", type=float, default=None, help="Penalty weight.")
@click.option("--k", type=int, default=None)
@click.option("--graph", "graph_kind", type=click.Choice(["knn", "epsilon"]), default=None)
@click.option("--epsilon", type=float, default=None)
@click.option("--bandwidth-multiplier", type=float, default=None)
@click.option("--refine", type=click.Choice(["auto", "project_rescale", "row_normalize",
                                             "none"]), default=None)
@click.option("--include-self/--no-include-self", "include_self", default=None)
@click.option("--vfi/--no-vfi", "vfi", default=None,
              help="Debias coordinates by vector field inversion.")
@click.option("--alpha", type=float, default=None, help="VFI ridge parameter.")
@click.option("--tol", type=float, default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--seed", type=int, default=None, help="Eigensolver seed.")
@click.pass_context
@_handle_errors
def embed(ctx, input_path, out, config_path, method, m, lam, k, graph_kind, epsilon,
          bandwidth_multiplier, refine, include_self, vfi, alpha, tol, max_iter, seed):
    """Embed a dataset CSV; writes coordinates CSV plus config sidecar."""
    cfg = _merged_config(
        config_path,
        **{
            "method.method": method, "method.m": m, "method.lam": lam,
            "method.refinement": refine, "method.include_self": include_self,
            "method.vfi": vfi, "method.alpha": alpha,
            "graph.k": k, "graph.kind": graph_kind, "graph.epsilon": epsilon,
            "graph.bandwidth_multiplier": bandwidth_multiplier,
            "solver.tol": tol, "solver.max_iter": max_iter, "solver.seed": seed,
        },
    )
    cfg.dataset.path = str(input_path)
    with _limit_threads(ctx):
        pc, dataset_name = _load_dataset(input_path)
        if dataset_name:
            cfg.dataset.name = dataset_name
        if cfg.graph.kind == "knn":
            g = knn_graph(pc, cfg.graph.k)
        else:
            if cfg.graph.epsilon is None:
                raise ParameterError("graph.kind='epsilon' requires an epsilon")
            g = epsilon_graph(pc, cfg.graph.epsilon)
        g = gaussian_weights(g, cfg.graph.bandwidth_multiplier)
        lap = laplacian(g)
        refinement = cfg.method.resolve_refinement(pc.dim)
        lam_eff = cfg.method.resolve_lam(refinement)
        if cfg.method.method == "baseline":
            emb = dfl.baseline_le(lap, cfg.method.m, tol=cfg.solver.tol,
                                  max_iter=cfg.solver.max_iter, seed=cfg.solver.seed)
        else:
            emb = dfl.deflate_embed(
                lap, pc, g, cfg.method.m, lam_eff, refinement=refinement,
                include_self=cfg.method.include_self, tol=cfg.solver.tol,
                max_iter=cfg.solver.max_iter, seed=cfg.solver.seed,
            )
            if cfg.method.vfi:
                cols = [
                    dfl.vfi_debias(emb.coords[:, j], emb.fields[j], g,
                                   alpha=cfg.method.alpha)
                    for j in range(emb.m)
                ]
                emb = dfl.Embedding(np.column_stack(cols), emb.eigenvalues,
                                    emb.fields, emb.config)
        cfg.outputs = {"embedding": str(out)}
        sidecar_payload = {
            "config": cfg.to_dict(),
            "eigenvalues": [float(v) for v in emb.eigenvalues],
            "resolved": {"refinement": refinement, "lam": lam_eff,
                         "bandwidth": g.bandwidth,
                         "mean_neighbor_distance": g.mean_neighbor_distance},
        }
        dfl.save_embedding(emb, out, json_path=None)
    _write_json(_sidecar(out), sidecar_payload)
    click.echo(f"wrote {emb.m}-column embedding for {emb.n} points to {out}")


def _load_embedding_csv(path):
    import csv as _csv

    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = [[float(c) for c in row] for row in reader if row]
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def _dataset_metrics(report, coords, pc, dataset_name):
    names = pc.truth_names
    truth = pc.truth
    for j in range(coords.shape[1]):
        for t, name in enumerate(names):
            col = truth[:, t]
            if np.ptp(col) == 0 or np.ptp(coords[:, j]) == 0:
                continue
            report.metrics[f"pearson_coord_{j + 1}_vs_{name}"] = ev.correlation(
                coords[:, j], col, "pearson")
            report.metrics[f"spearman_coord_{j + 1}_vs_{name}"] = ev.correlation(
                coords[:, j], col, "spearman")
    if dataset_name == "box":
        for j in range(coords.shape[1]):
            for mode in [(1, 0), (2, 0), (1, 1), (1, 2)]:
                key = f"eigenfunction_match_coord_{j + 1}_mode_{mode[0]}_axis_{mode[1]}"
                report.metrics[key] = ev.eigenfunction_match(coords[:, j], pc, mode)
    if dataset_name == "scurve" and truth is not None and truth.shape[1] >= 2:
        s, w = truth[:, 0], truth[:, 1]
        report.metrics["r2_coord_1_vs_s"] = ev.linear_fit_r2(s, coords[:, 0])
        report.metrics["width_uniformity_coord_1"] = ev.width_uniformity(
            coords[:, 0], s, w)
    if dataset_name == "sphere" and coords.shape[1] >= 2:
        scores = ev.sphere_polar_scores(coords[:, :2], pc)
        report.metrics["sphere_longitude_score"] = scores["longitude"]
        report.metrics["sphere_latitude_score"] = scores["latitude"]


@main.command()
@click.option("--embedding", "embedding_path", type=click.Path(exists=True,
              dir_okay=False), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True,
              dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--spans-out", type=click.Path(dir_okay=False), default=None,
              help="Also dump per-bin width spans of coord_1 (needs 2 truth columns).")
@click.pass_context
@_handle_errors
def evaluate(ctx, embedding_path, dataset_path, out, spans_out):
    """Score an embedding against the dataset's ground truth."""
    pc, dataset_name = _load_dataset(dataset_path)
    if pc.truth is None:
        raise ParameterError(f"{dataset_path} has no truth_* columns to evaluate against")
    header, coords = _load_embedding_csv(embedding_path)
    if coords.shape[0] != pc.n:
        raise ParameterError("embedding and dataset row counts differ")
    emb_sidecar = _sidecar(embedding_path)
    embedding_meta = {}
    if emb_sidecar.exists():
        with open(emb_sidecar) as fh:
            embedding_meta = json.load(fh)
    with _limit_threads(ctx):
        report = ev.MetricReport(
            dataset={"path": str(dataset_path), "name": dataset_name or "csv",
                     "n": pc.n},
            embedding={"path": str(embedding_path),
                       "config": embedding_meta.get("config", {})},
        )
        _dataset_metrics(report, coords, pc, dataset_name)
        report.validate()
        if spans_out is not None:
            if pc.truth.shape[1] < 2:
                raise ParameterError("--spans-out needs two truth columns")
            ev.save_width_spans(coords[:, 0], pc.truth[:, 0], pc.truth[:, 1],
                                spans_out)
    with open(out, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    click.echo(f"wrote {len(report.metrics)} metrics to {out}")


def _region_labels(pc, dataset_name):
    if dataset_name == "sphere" and pc.truth is not None and pc.truth.shape[1] >= 2:
        lon, lat = pc.truth[:, 0], pc.truth[:, 1]
        ns = np.where(lat >= 0, "N", "S")
        east = np.where(lon >= 0, "E", "W")
        return np.char.add(ns, east)
    if pc.truth is not None and pc.truth.shape[1] >= 1:
        # quartile bins of the first truth coordinate, for slice coloring
        col = pc.truth[:, 0]
        edges = np.quantile(col, [0.25, 0.5, 0.75])
        return np.array([f"q{int(np.searchsorted(edges, v))}" for v in col])
    return np.array(["all"] * pc.n)


@main.command("export-plot")
@click.option("--embedding", "embedding_path", type=click.Path(exists=True,
              dir_okay=False), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True,
              dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_context
@_handle_errors
def export_plot(ctx, embedding_path, dataset_path, out):
    """Join embedding, truth, and region labels into one plot-ready CSV."""
    import csv as _csv

    pc, dataset_name = _load_dataset(dataset_path)
    header, coords = _load_embedding_csv(embedding_path)
    if coords.shape[0] != pc.n:
        raise ParameterError("embedding and dataset row counts differ")
    labels = _region_labels(pc, dataset_name)
    truth_header = [f"truth_{name}" for name in pc.truth_names]
    with open(out, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(header + truth_header + ["region"])
        for i in range(pc.n):
            row = [f"{v:.17g}" for v in coords[i]]
            if pc.truth is not None:
                row += [f"{v:.17g}" for v in pc.truth[i]]
            row.append(labels[i])
            writer.writerow(row)
    click.echo(f"wrote plot table with {pc.n} rows to {out}")


if __name__ == "__main__":
    main()
