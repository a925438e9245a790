"""Principal-axis frames for detected regions and scan entry/exit endpoints.

Each region gets an orthonormal frame from the eigen-decomposition of its
contour-point covariance: the first axis is the direction of largest spread,
the second completes a right-handed pair.  The frame fixes the rectangle-like
extents (length along axis 1, width along axis 2) and the two points where
the first axis crosses the contour, which later become the scan entry and
exit endpoints of the region.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRegionError
from .geometry import as_points, line_polygon_intersections

# Frames with a principal-to-secondary eigenvalue ratio under this bound are
# direction-ambiguous; plans built from them carry a flag instead of an error.
ISOTROPY_RATIO = 1.05

_WIDTH_EPS = 1e-9


@dataclass(eq=False)
class PcaFrame:
    """Orthonormal region frame.

    ``axes`` rows are the unit principal directions ordered by descending
    eigenvalue; determinant is +1.  ``length``/``width`` are the contour
    extents along the first/second axis.
    """

    centroid: np.ndarray
    axes: np.ndarray
    length: float
    width: float


@dataclass(eq=False)
class RegionPlan:
    """A region bundled with its frame and scan endpoints."""

    blob: object
    frame: PcaFrame
    entry_point: np.ndarray
    exit_point: np.ndarray
    near_isotropic: bool = False


def centroid(contour) -> np.ndarray:
    pts = as_points(contour)
    if len(pts) < 3:
        raise DegenerateRegionError(f"degenerate contour: {len(pts)} points (need 3)")
    return pts.mean(axis=0)


def _covariance(pts: np.ndarray) -> np.ndarray:
    d = pts - pts.mean(axis=0)
    return (d.T @ d) / len(pts)


def pca_frame(contour) -> PcaFrame:
    """Covariance eigen-frame of the contour points.

    Sign convention: the first axis has a non-negative x component (ties:
    non-negative y); the second axis is the +90 degree rotation of the first,
    which makes the frame exactly orthonormal and right-handed.
    """
    pts = as_points(contour)
    c = centroid(pts)
    w, v = np.linalg.eigh(_covariance(pts))
    first = v[:, 1]  # eigh orders eigenvalues ascending
    if first[0] < 0 or (first[0] == 0 and first[1] < 0):
        first = -first
    second = np.array([-first[1], first[0]])
    axes = np.vstack([first, second])
    proj = (pts - c) @ axes.T
    length = float(np.ptp(proj[:, 0]))
    width = float(np.ptp(proj[:, 1]))
    if width <= _WIDTH_EPS:
        raise DegenerateRegionError("degenerate region: zero width")
    return PcaFrame(centroid=c, axes=axes, length=length, width=width)


def _points_maybe_single(points) -> tuple[np.ndarray, bool]:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1 and pts.shape == (2,):
        return pts[None, :], True
    return as_points(pts), False


def reproject(points, frame: PcaFrame) -> np.ndarray:
    """Map image points into the frame (centroid-origin, principal axes).

    Accepts a single (2,) point or an (N, 2) array; the output shape follows
    the input.
    """
    pts, single = _points_maybe_single(points)
    out = (pts - frame.centroid) @ frame.axes.T
    return out[0] if single else out


def from_frame(points, frame: PcaFrame) -> np.ndarray:
    """Inverse of reproject: frame coordinates back to image coordinates."""
    pts, single = _points_maybe_single(points)
    out = pts @ frame.axes + frame.centroid
    return out[0] if single else out


def entry_exit_points(contour, frame: PcaFrame) -> tuple[np.ndarray, np.ndarray]:
    """The two extreme crossings of the first principal axis with the contour.

    The line through the centroid along axis 1 is intersected with every
    contour segment; the crossing with the smallest axis coordinate is the
    entry point, the largest is the exit point.
    """
    ts = line_polygon_intersections(frame.centroid, frame.axes[0], contour)
    if len(ts) < 2 or ts[-1] - ts[0] <= _WIDTH_EPS:
        raise DegenerateRegionError("axis does not cross contour in two points")
    entry = frame.centroid + ts[0] * frame.axes[0]
    exit_ = frame.centroid + ts[-1] * frame.axes[0]
    return entry, exit_


def plan_region(blob) -> RegionPlan:
    """Build the full geometric plan for one detected blob."""
    frame = pca_frame(blob.contour)
    entry, exit_ = entry_exit_points(blob.contour, frame)
    w = np.linalg.eigvalsh(_covariance(as_points(blob.contour)))
    near_isotropic = bool(w[0] > 0 and w[1] / w[0] < ISOTROPY_RATIO)
    return RegionPlan(
        blob=blob,
        frame=frame,
        entry_point=entry,
        exit_point=exit_,
        near_isotropic=near_isotropic,
    )


def plan_regions(blobs) -> list[RegionPlan]:
    return [plan_region(b) for b in blobs]
