"""Metrics for scoring embeddings against ground truth.

Correlation and R^2 quantify how well coordinates track intrinsic truth;
``width_uniformity`` measures the boundary compression a Neumann-biased
coordinate produces (0 means strips of perfectly even width);
``eigenfunction_match`` compares a coordinate against the analytic cosine
eigenfunctions of a box; ``sphere_polar_scores`` implements the
per-hemisphere Spearman protocol for sphere embeddings.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .datasets import PointCloud
from .errors import ParameterError


def _as_vector(a, name):
    a = np.asarray(a, dtype=np.float64).ravel()
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} contains non-finite entries")
    return a


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ParameterError("correlation of a constant input is undefined")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def correlation(a, b, kind: str = "pearson") -> float:
    """Sample correlation of two equal-length vectors.

    ``kind`` is ``pearson`` or ``spearman`` (average ranks for ties).
    Constant inputs raise ParameterError.
    """
    a = _as_vector(a, "a")
    b = _as_vector(b, "b")
    if a.size != b.size:
        raise ParameterError("inputs must have equal length")
    if kind == "pearson":
        return _pearson(a, b)
    if kind == "spearman":
        return _pearson(rankdata(a), rankdata(b))
    raise ParameterError(f"unknown correlation kind {kind!r}")


def linear_fit_r2(x, y) -> float:
    """R^2 of the ordinary least squares fit y ~ a*x + b."""
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.size != y.size:
        raise ParameterError("inputs must have equal length")
    if np.ptp(x) == 0.0:
        raise ParameterError("linear fit against a constant x is undefined")
    sy = y - y.mean()
    ss_tot = float(sy @ sy)
    if ss_tot == 0.0:
        raise ParameterError("R^2 with a constant y is undefined")
    return _pearson(x, y) ** 2


def width_uniformity(coord, truth_long, truth_wide, bins: int = 10) -> float:
    """Coefficient of variation of per-bin coordinate spans.

    Points are binned by quantiles of ``truth_long``; within each bin the
    coordinate range per unit of ``truth_wide`` range is the bin's span.
    Returns std/|mean| of the spans: 0 means perfectly even strips.  Bins
    that end up empty (or degenerate) trigger a warning and a retry with
    one bin fewer.
    """
    if bins < 5:
        raise ParameterError("bins must be >= 5")
    coord = _as_vector(coord, "coord")
    tl = _as_vector(truth_long, "truth_long")
    tw = _as_vector(truth_wide, "truth_wide")
    if not (coord.size == tl.size == tw.size):
        raise ParameterError("inputs must have equal length")
    return _width_uniformity(coord, tl, tw, bins)


def _width_uniformity(coord, tl, tw, bins):
    if bins < 2:
        raise ParameterError("cannot form two non-degenerate quantile bins")
    edges = np.quantile(tl, np.linspace(0.0, 1.0, bins + 1))
    spans = []
    for b in range(bins):
        if b == bins - 1:
            mask = (tl >= edges[b]) & (tl <= edges[b + 1])
        else:
            mask = (tl >= edges[b]) & (tl < edges[b + 1])
        if mask.sum() < 2 or np.ptp(tw[mask]) == 0.0:
            warnings.warn(
                f"bin {b} is empty or degenerate; retrying with {bins - 1} bins",
                stacklevel=2,
            )
            return _width_uniformity(coord, tl, tw, bins - 1)
        spans.append(np.ptp(coord[mask]) / np.ptp(tw[mask]))
    spans = np.asarray(spans)
    mean = spans.mean()
    if mean == 0.0:
        return 0.0
    return float(spans.std() / abs(mean))


def width_spans(coord, truth_long, truth_wide, bins: int = 10):
    """Per-bin (long_lo, long_hi, span) triples behind width_uniformity.

    Exposed for plotting; the same quantile binning and degenerate-bin
    reduction as :func:`width_uniformity`.
    """
    if bins < 5:
        raise ParameterError("bins must be >= 5")
    coord = _as_vector(coord, "coord")
    tl = _as_vector(truth_long, "truth_long")
    tw = _as_vector(truth_wide, "truth_wide")
    while bins >= 2:
        edges = np.quantile(tl, np.linspace(0.0, 1.0, bins + 1))
        rows = []
        for b in range(bins):
            if b == bins - 1:
                mask = (tl >= edges[b]) & (tl <= edges[b + 1])
            else:
                mask = (tl >= edges[b]) & (tl < edges[b + 1])
            if mask.sum() < 2 or np.ptp(tw[mask]) == 0.0:
                rows = None
                break
            rows.append((float(edges[b]), float(edges[b + 1]),
                         float(np.ptp(coord[mask]) / np.ptp(tw[mask]))))
        if rows is not None:
            return rows
        warnings.warn(f"degenerate bin; retrying with {bins - 1} bins", stacklevel=2)
        bins -= 1
    raise ParameterError("cannot form two non-degenerate quantile bins")


def save_width_spans(coord, truth_long, truth_wide, path, bins: int = 10):
    """Write the per-bin width spans as CSV ``long_lo,long_hi,span``."""
    rows = width_spans(coord, truth_long, truth_wide, bins)
    with open(path, "w") as fh:
        fh.write("long_lo,long_hi,span\n")
        for lo, hi, span in rows:
            fh.write(f"{lo:.17g},{hi:.17g},{span:.17g}\n")


def eigenfunction_match(coord, pc: PointCloud, mode, lengths=None) -> float:
    """|Pearson| of a coordinate against a box cosine eigenfunction.

    ``mode`` is (j, axis) with axis 0-based: the target function is
    cos(j * pi * x_axis / L_axis).  ``lengths`` gives the box side lengths;
    when omitted, L_axis is inferred as the maximum of the truth column
    (exact only in the large-n limit).
    """
    if pc.truth is None:
        raise ParameterError("eigenfunction_match requires ground truth")
    j, axis = mode
    if not 0 <= axis < pc.truth.shape[1]:
        raise ParameterError(f"axis {axis} out of range")
    x = pc.truth[:, axis]
    length = float(lengths[axis]) if lengths is not None else float(x.max())
    if length <= 0:
        raise ParameterError("axis length must be positive")
    target = np.cos(j * np.pi * x / length)
    return abs(correlation(coord, target, "pearson"))


def interior_mask(truth, bounds, margin: float) -> np.ndarray:
    """Mask of points at least ``margin`` inside an axis-aligned box.

    ``bounds`` is a sequence of (low, high) per truth column; metrics use
    this to exclude the boundary collar where estimator guarantees lapse.
    """
    truth = np.atleast_2d(np.asarray(truth, dtype=np.float64))
    mask = np.ones(truth.shape[0], dtype=bool)
    for col, (lo, hi) in enumerate(bounds):
        mask &= (truth[:, col] > lo + margin) & (truth[:, col] < hi - margin)
    return mask


def sphere_polar_scores(coords, pc: PointCloud) -> dict:
    """Per-hemisphere |Spearman| of a 2-column embedding vs (lon, lat).

    Hemispheres are the four sign-quadrants of the truth (latitude,
    longitude); |Spearman| is computed in each quadrant and averaged.
    The first coordinate is scored against longitude and the second
    against latitude.
    """
    if pc.truth is None or pc.truth.shape[1] < 2:
        raise ParameterError("sphere scoring requires (lon, lat) ground truth")
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] < 2:
        raise ParameterError("sphere scoring requires two embedding coordinates")
    lon, lat = pc.truth[:, 0], pc.truth[:, 1]

    def quadrant_mean(coord, target):
        scores = []
        for lat_side in (lat >= 0, lat < 0):
            for lon_side in (lon >= 0, lon < 0):
                m = lat_side & lon_side
                scores.append(abs(correlation(coord[m], target[m], "spearman")))
        return float(np.mean(scores))

    return {
        "longitude": quadrant_mean(coords[:, 0], lon),
        "latitude": quadrant_mean(coords[:, 1], lat),
    }


@dataclass
class MetricReport:
    """Named scalar metrics plus references to their provenance."""

    metrics: dict[str, float] = field(default_factory=dict)
    dataset: dict = field(default_factory=dict)
    embedding: dict = field(default_factory=dict)

    def validate(self):
        for name, value in self.metrics.items():
            if not np.isfinite(value):
                raise ParameterError(f"metric {name} is not finite")
            lowered = name.lower()
            if "pearson" in lowered or "spearman" in lowered:
                if not -1.0 <= value <= 1.0:
                    raise ParameterError(f"correlation {name}={value} outside [-1, 1]")
            if lowered.endswith("_r2") and not 0.0 <= value <= 1.0 + 1e-12:
                raise ParameterError(f"R^2 {name}={value} outside [0, 1]")
        return self

    def to_json(self) -> str:
        payload = {
            "metrics": {k: float(v) for k, v in self.metrics.items()},
            "dataset": self.dataset,
            "embedding": self.embedding,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        payload = json.loads(text)
        return cls(
            metrics=dict(payload.get("metrics", {})),
            dataset=dict(payload.get("dataset", {})),
            embedding=dict(payload.get("embedding", {})),
        )
