"""Waypoint polylines: the in-region sinusoidal sweep and straight travel legs.

The coverage curve for a region lives in its principal frame: a sinusoid
along the first axis whose period equals the laser diameter, so adjacent
sweep crossings sit half a diameter apart, and whose amplitude is half the
region width.  Mapping it back to image coordinates and clipping against the
contour yields the ablation waypoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import as_points, distance_to_polygon, point_in_polygon
from .region_geometry import PcaFrame, RegionPlan, from_frame

TRAVEL = "travel"
ABLATE = "ablate"
DEFAULT_STEP_PX = 0.5

_DEDUPE_EPS = 1e-9
_BOUNDARY_EPS = 1e-9


@dataclass(eq=False)
class Polyline:
    points: np.ndarray
    mode: str

    def __post_init__(self):
        self.points = as_points(self.points)
        if self.mode not in (TRAVEL, ABLATE):
            raise ValueError(f"mode must be '{TRAVEL}' or '{ABLATE}', got {self.mode!r}")

    def __len__(self) -> int:
        return len(self.points)


def validate_polyline(line: Polyline, step_max: float = DEFAULT_STEP_PX) -> list[str]:
    """Return human-readable violations of the waypoint-polyline contract."""
    problems = []
    if len(line) < 2:
        problems.append(f"polyline has {len(line)} points (need 2)")
        return problems
    gaps = np.hypot(*np.diff(line.points, axis=0).T)
    if np.any(gaps == 0.0):
        problems.append("consecutive duplicate points")
    if np.any(gaps > step_max + 1e-12):
        problems.append(f"spacing {gaps.max():.6g} px exceeds step limit {step_max} px")
    return problems


def sinusoid_in_frame(
    length: float, width: float, laser_diameter: float, step: float
) -> Polyline:
    """Sample the coverage sinusoid in frame coordinates.

    y = (width / 2) * sin(2*pi*x / laser_diameter) for x in [0, length],
    sampled so that both the x increments and the point-to-point distances
    stay at or below ``step`` (steep flanks get extra subdivision).  Every
    crest and trough inside (0, length) is sampled exactly, so the polyline
    reaches the full +-width/2 envelope instead of chording across the peaks.
    """
    if not (length > 0 and width > 0 and laser_diameter > 0):
        raise ValueError("length, width and laser_diameter must be positive")
    if not (0 < step <= laser_diameter / 4.0):
        raise ValueError(
            f"step must be in (0, laser_diameter/4 = {laser_diameter / 4.0:.6g}], got {step}"
        )
    amplitude = width / 2.0
    omega = 2.0 * math.pi / laser_diameter

    def curve(x):
        return amplitude * np.sin(omega * x)

    n = max(1, math.ceil(length / step))
    xs = np.linspace(0.0, length, n + 1)
    extrema = np.arange(laser_diameter / 4.0, length, laser_diameter / 2.0)
    xs = np.unique(np.concatenate([xs, extrema[extrema < length]]))
    ys = curve(xs)
    for _ in range(64):
        gaps = np.hypot(np.diff(xs), np.diff(ys))
        wide = gaps > step
        if not np.any(wide):
            break
        mids = 0.5 * (xs[:-1][wide] + xs[1:][wide])
        xs = np.sort(np.concatenate([xs, mids]))
        ys = curve(xs)
    else:
        raise RuntimeError("sinusoid subdivision failed to converge")
    return Polyline(np.column_stack([xs, ys]), ABLATE)


def to_image_frame(line: Polyline, frame: PcaFrame, offset) -> Polyline:
    """Map a frame-coordinate polyline to image coordinates plus a translation."""
    off = np.asarray(offset, dtype=float)
    return Polyline(from_frame(line.points, frame) + off, line.mode)


def clip_to_region(line: Polyline, contour) -> Polyline:
    """Project points that escape the contour back onto its boundary.

    Points on or inside the contour are never moved, so the entry and exit
    endpoints, which lie on the contour by construction, stay exact.
    Projection preserves order but can locally stretch the spacing, which the
    tracking loop tolerates; consecutive duplicates it creates are collapsed.
    """
    poly = as_points(contour)
    pts = line.points.copy()
    for i in range(len(pts)):
        if not point_in_polygon(pts[i], poly, boundary_eps=_BOUNDARY_EPS):
            _, nearest = distance_to_polygon(pts[i], poly)
            pts[i] = nearest
    keep = [0]
    for i in range(1, len(pts)):
        if np.hypot(*(pts[i] - pts[keep[-1]])) > _DEDUPE_EPS:
            keep.append(i)
    return Polyline(pts[keep], line.mode)


def region_scan_curve(
    plan: RegionPlan, laser_diameter: float, step: float = DEFAULT_STEP_PX
) -> Polyline:
    """Image-frame ablation curve for a planned region.

    The frame-coordinate sinusoid starts at x = 0, which the alignment offset
    pins to the entry point; its far end then lands on the exit point's
    axis-1 coordinate.  The result is clipped against the region contour.
    """
    base = sinusoid_in_frame(plan.frame.length, plan.frame.width, laser_diameter, step)
    offset = plan.entry_point - plan.frame.centroid
    image = to_image_frame(base, plan.frame, offset)
    image.points[0] = plan.entry_point  # exact, not within float noise
    return clip_to_region(image, plan.blob.contour)


def straight_travel(start, end, step: float = DEFAULT_STEP_PX) -> Polyline:
    """Straight repositioning leg from start to end, sampled at <= step."""
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    d = float(np.hypot(*(b - a)))
    if d == 0.0:
        raise ValueError("travel endpoints coincide")
    if not (step > 0):
        raise ValueError("step must be positive")
    n = max(1, math.ceil(d / step))
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return Polyline(a + t * (b - a), TRAVEL)
