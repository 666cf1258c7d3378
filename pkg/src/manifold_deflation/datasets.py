"""Synthetic manifold generators and point-cloud CSV I/O.

All generators are deterministic: the same parameters and seed reproduce
the returned cloud bit for bit.  Ground-truth intrinsic coordinates are
kept alongside the ambient points so embeddings can be scored later.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ParseError

# Centered 0.9 x 0.4 rectangle: removes 12% of the unit-density area.
DEFAULT_HOLE = (1.05, 1.95, 0.3, 0.7)

# Strip used throughout: [0, 9pi] x [0, 3pi] x [0, pi].
STRIP_LENGTHS = (9.0 * np.pi, 3.0 * np.pi, np.pi)

_SCURVE_RADIUS = 1.5 / np.pi


@dataclass(frozen=True)
class PointCloud:
    """n points in ambient dimension d, with optional intrinsic truth.

    Attributes
    ----------
    points : ndarray of shape (n, d)
        Ambient coordinates.
    truth : ndarray of shape (n, g) or None
        Intrinsic coordinates used only for evaluation.
    seed : int
        Seed used for generation (0 for deterministic or loaded clouds).
    truth_names : tuple of str
        Column names for the truth block, used in the CSV header.
    """

    points: np.ndarray
    truth: np.ndarray | None = None
    seed: int = 0
    truth_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ParameterError("points must be a non-empty 2-D array")
        if not np.all(np.isfinite(pts)):
            raise ParameterError("points contain non-finite entries")
        object.__setattr__(self, "points", pts)
        if self.truth is not None:
            tr = np.ascontiguousarray(np.asarray(self.truth, dtype=np.float64))
            if tr.ndim != 2 or tr.shape[0] != pts.shape[0]:
                raise ParameterError("truth must have exactly one row per point")
            if not np.all(np.isfinite(tr)):
                raise ParameterError("truth contains non-finite entries")
            object.__setattr__(self, "truth", tr)
            names = tuple(self.truth_names) or tuple(
                f"t{i}" for i in range(tr.shape[1])
            )
            if len(names) != tr.shape[1]:
                raise ParameterError("truth_names must match truth columns")
            object.__setattr__(self, "truth_names", names)
        else:
            object.__setattr__(self, "truth_names", ())

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def scurve_surface(s, w):
    """Map intrinsic (s, w) in [0,3]x[0,1] onto the S-shaped surface in R^3.

    The map is unit speed in s (two half-cylinders of radius 1.5/pi joined
    continuously at s=1.5 and curving opposite ways), so it is an isometric
    embedding of the 3 x 1 rectangle; w runs along the cylinder axis.
    """
    s = np.asarray(s, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    r = _SCURVE_RADIUS
    first = s <= 1.5
    theta = np.where(first, s / r, (s - 1.5) / r)
    x = np.where(first, r * np.sin(theta), -r * np.sin(theta))
    z = np.where(first, r * (1.0 - np.cos(theta)), r * (3.0 - np.cos(theta)))
    return np.column_stack([x, np.broadcast_to(w, s.shape), z])


def _check_hole(hole):
    s0, s1, w0, w1 = (float(v) for v in hole)
    if not (0.0 <= s0 < s1 <= 3.0 and 0.0 <= w0 < w1 <= 1.0):
        raise ParameterError(f"hole {hole!r} must be a rectangle inside [0,3]x[0,1]")
    if s0 == 0.0 and s1 == 3.0 and w0 == 0.0 and w1 == 1.0:
        raise ParameterError("hole covers the full rectangle: empty manifold")
    return s0, s1, w0, w1


def generate_scurve(n, hole=None, noise_halfwidth=0.0, seed=0):
    """Sample the S-curve, optionally cutting a hole and adding cube noise.

    Intrinsic pairs (s, w) are drawn uniformly from [0,3]x[0,1]; pairs
    strictly inside the hole rectangle are rejected (not resampled), so the
    returned cloud has roughly n*(1 - hole_area/3) points.  Noise is i.i.d.
    uniform on the cube [-noise_halfwidth, +noise_halfwidth]^3.

    Parameters
    ----------
    n : int
        Number of intrinsic samples drawn before hole rejection.
    hole : tuple (s0, s1, w0, w1) or None
        Axis-aligned rectangle to cut out; see DEFAULT_HOLE.
    noise_halfwidth : float
        Half-width of the additive noise cube (0 for a noiseless surface).
    seed : int
        RNG seed; identical (parameters, seed) are bit-identical.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if noise_halfwidth < 0:
        raise ParameterError("noise_halfwidth must be >= 0")
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.0, 3.0, n)
    w = rng.uniform(0.0, 1.0, n)
    if hole is not None:
        s0, s1, w0, w1 = _check_hole(hole)
        keep = ~((s > s0) & (s < s1) & (w > w0) & (w < w1))
        s, w = s[keep], w[keep]
        if s.size == 0:
            raise ParameterError("all samples fell inside the hole: empty manifold")
    pts = scurve_surface(s, w)
    if noise_halfwidth > 0:
        pts = pts + rng.uniform(-noise_halfwidth, noise_halfwidth, size=pts.shape)
    return PointCloud(pts, np.column_stack([s, w]), seed=seed, truth_names=("s", "w"))


def generate_sphere_fibonacci(n, stretch_ns=1.0, stretch_ew=1.02):
    """Deterministic Fibonacci lattice on the unit sphere, then stretched.

    The z axis is scaled by ``stretch_ns`` and the x axis by ``stretch_ew``
    to break the degeneracy of the leading eigenvectors deterministically.
    Truth stores (longitude, latitude) of the pre-stretch point, with
    longitude in (-pi, pi] and latitude in [-pi/2, pi/2].
    """
    if n < 4:
        raise ParameterError("n must be >= 4")
    if stretch_ns <= 0 or stretch_ew <= 0:
        raise ParameterError("stretch factors must be > 0")
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - 2.0 * (i + 0.5) / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    golden_angle = np.pi * (3.0 - np.sqrt(5.0))
    phi = golden_angle * i
    x = np.cos(phi) * rho
    y = np.sin(phi) * rho
    lon = np.arctan2(y, x)
    lat = np.arcsin(np.clip(z, -1.0, 1.0))
    pts = np.column_stack([x * stretch_ew, y, z * stretch_ns])
    return PointCloud(
        pts, np.column_stack([lon, lat]), seed=0, truth_names=("lon", "lat")
    )


def generate_box(n, lengths, seed=0):
    """Uniform i.i.d. samples from a solid box; truth keeps all coordinates."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    lengths = np.asarray(lengths, dtype=np.float64)
    if lengths.shape != (3,) or np.any(lengths <= 0):
        raise ParameterError("lengths must be 3 positive values")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1.0, size=(n, 3)) * lengths
    return PointCloud(pts, pts.copy(), seed=seed, truth_names=("x0", "x1", "x2"))


def save_csv(pc: PointCloud, path):
    """Write a point cloud as CSV: x0..x{d-1}, then truth_* columns."""
    header = [f"x{i}" for i in range(pc.dim)]
    header += [f"truth_{name}" for name in pc.truth_names]
    blocks = [pc.points] if pc.truth is None else [pc.points, pc.truth]
    data = np.hstack(blocks)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in data:
            writer.writerow([f"{v:.17g}" for v in row])


def load_csv(path) -> PointCloud:
    """Load a point cloud written by :func:`save_csv` (or any compatible CSV).

    Columns whose header starts with ``truth_`` form the truth block; all
    other columns are ambient coordinates, in file order.  Raises ParseError
    with the offending row number for ragged or non-numeric rows.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        truth_cols = [i for i, h in enumerate(header) if h.startswith("truth_")]
        point_cols = [i for i, h in enumerate(header) if not h.startswith("truth_")]
        if not point_cols:
            raise ParseError(f"{path}: no coordinate columns in header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    points = data[:, point_cols]
    truth = data[:, truth_cols] if truth_cols else None
    names = tuple(header[i][len("truth_"):] for i in truth_cols)
    return PointCloud(points, truth, seed=0, truth_names=names)
