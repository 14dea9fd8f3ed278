"""Rigid motion compensation: affine fits from tracked points, ROI propagation.

The inter-frame face motion is modeled as a full 6-parameter 2D affine
map fitted to tracked feature point correspondences by least squares;
the ROI boundary polygon is carried frame to frame by the fitted maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, NumericalError, ValidationError
from .trace_io import PointTrackTable

# Relative conditioning floor for the 3x3 normal-equation solve.
SINGULARITY_RTOL = 1e-10

MIN_POINTS = 3


@dataclass(frozen=True)
class AffineTransform:
    """2D affine map p -> linear @ p + translation (pixels)."""

    linear: np.ndarray       # 2x2
    translation: np.ndarray  # 2-vector

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float)
        tr = np.asarray(self.translation, dtype=float)
        if lin.shape != (2, 2) or tr.shape != (2,):
            raise ValidationError("linear must be 2x2 and translation a 2-vector")
        if not (np.all(np.isfinite(lin)) and np.all(np.isfinite(tr))):
            raise ValidationError("transform entries must be finite")
        if abs(np.linalg.det(lin)) <= 1e-12:
            raise ValidationError("transform is not invertible")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(np.eye(2), np.zeros(2))

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.linear.T + self.translation

    def compose(self, other: "AffineTransform") -> "AffineTransform":
        """Return the map equivalent to applying ``other`` first, then self."""
        return AffineTransform(
            self.linear @ other.linear,
            self.linear @ other.translation + self.translation,
        )

    def inverse(self) -> "AffineTransform":
        inv = np.linalg.inv(self.linear)
        return AffineTransform(inv, -inv @ self.translation)


@dataclass(frozen=True)
class PointSet:
    """Identified 2D feature points."""

    ids: np.ndarray     # int identifiers, unique
    coords: np.ndarray  # shape (k, 2)

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=int)
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValidationError("coords must have shape (k, 2)")
        if len(ids) != len(coords):
            raise ValidationError("ids and coords must have equal length")
        if len(np.unique(ids)) != len(ids):
            raise ValidationError("point ids must be unique")
        if not np.all(np.isfinite(coords)):
            raise ValidationError("coordinates must be finite")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "coords", coords)

    def __len__(self) -> int:
        return len(self.ids)


def _segments_properly_intersect(p1, p2, q1, q2) -> bool:
    """True when segments p1p2 and q1q2 share any point."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    def on_segment(a, b, c):
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(p1, p2, q1):
        return True
    if o2 == 0 and on_segment(p1, p2, q2):
        return True
    if o3 == 0 and on_segment(q1, q2, p1):
        return True
    if o4 == 0 and on_segment(q1, q2, p2):
        return True
    return False


@dataclass(frozen=True)
class RoiPolygon:
    """Ordered ROI boundary vertices; must be a simple polygon."""

    vertices: np.ndarray  # shape (l, 2)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValidationError("vertices must have shape (l, 2)")
        if len(v) < 3:
            raise ValidationError("polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise ValidationError("vertices must be finite")
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                # skip edges sharing a vertex (adjacent, incl. the wrap edge)
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                if _segments_properly_intersect(
                    v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]
                ):
                    raise ValidationError("polygon is self-intersecting")
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class AffineFit:
    """Least-squares fit result: transform, residual, and points used."""

    transform: AffineTransform
    residual_sum_sq: float
    n_points: int


def _common_points(p_curr: PointSet, p_next: PointSet) -> tuple[np.ndarray, np.ndarray]:
    common, idx_a, idx_b = np.intersect1d(
        p_curr.ids, p_next.ids, return_indices=True
    )
    if len(common) < MIN_POINTS:
        raise DegenerateGeometryError(
            f"only {len(common)} common points, need >= {MIN_POINTS}"
        )
    return p_curr.coords[idx_a], p_next.coords[idx_b]


def _check_not_collinear(coords: np.ndarray) -> None:
    centered = coords - coords.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= 1e-9 * max(sv[0], 1.0):
        raise DegenerateGeometryError("points are collinear")


def estimate_affine(p_curr: PointSet, p_next: PointSet) -> AffineFit:
    """Fit the affine map minimizing sum ||next - A(curr)||^2.

    Points are matched by id; ids present in only one set are dropped.
    Solved in closed form from the 3x3 normal equations of the
    homogeneous linear system, one solve shared by both coordinates.

    Raises:
        DegenerateGeometryError: fewer than 3 common points, or collinear.
        NumericalError: normal-equation matrix singular beyond tolerance.
    """
    src, dst = _common_points(p_curr, p_next)
    _check_not_collinear(src)

    g = np.column_stack([src, np.ones(len(src))])  # (k, 3)
    m = g.T @ g
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= SINGULARITY_RTOL * sv[0]:
        raise NumericalError("normal-equation matrix is singular beyond tolerance")
    # columns: [a11 a12 tx] and [a21 a22 ty]
    params = np.linalg.solve(m, g.T @ dst)
    linear = params[:2].T
    translation = params[2]
    transform = AffineTransform(linear, translation)
    residual = float(np.sum((dst - transform.apply(src)) ** 2))
    return AffineFit(transform, residual, len(src))


def propagate_roi(roi: RoiPolygon, a: AffineTransform) -> RoiPolygon:
    """Map every ROI vertex by ``a``, preserving vertex order."""
    return RoiPolygon(a.apply(roi.vertices))


def track_roi(initial: RoiPolygon, tracks: PointTrackTable) -> list[RoiPolygon]:
    """Carry the ROI across all frames of a track table.

    The initial polygon belongs to the table's first frame; each later
    frame's polygon is the previous one propagated by the affine fit of
    that frame pair. Output has one polygon per frame.
    """
    frames = tracks.frame_range()
    polygons = [initial]
    current = initial
    prev_frame = frames[0]
    prev_ids, prev_coords = tracks.points_at(prev_frame)
    for frame in frames[1:]:
        ids, coords = tracks.points_at(frame)
        try:
            fit = estimate_affine(
                PointSet(prev_ids, prev_coords), PointSet(ids, coords)
            )
        except (DegenerateGeometryError, NumericalError) as exc:
            raise type(exc)(f"frames {prev_frame}->{frame}: {exc}") from exc
        current = propagate_roi(current, fit.transform)
        polygons.append(current)
        prev_frame, prev_ids, prev_coords = frame, ids, coords
    return polygons
