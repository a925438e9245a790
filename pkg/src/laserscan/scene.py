"""Grayscale scene synthesis and detection of bright regions and the laser spot.

Intensity conventions used throughout the pipeline:

* background is dark (<= 60, uniform value ``BACKGROUND_INTENSITY``),
* target regions occupy ``REGION_INTENSITY_MIN..REGION_INTENSITY_MAX``,
* the laser spot occupies a reserved band ``LASER_INTENSITY_MIN..255``.

Keeping the two bright bands disjoint lets one raster carry both the targets
and the spot: region detection masks intensities to the region band, spot
detection looks only above ``LASER_INTENSITY_MIN``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import LaserSpotError, PlacementError
from .geometry import signed_area

BACKGROUND_INTENSITY = 30
REGION_INTENSITY_MIN = 200
REGION_INTENSITY_MAX = 240
LASER_INTENSITY_MIN = 250
DEFAULT_THRESHOLD = 128
DEFAULT_SCALE_UM_PER_PX = 120.0
DEFAULT_LASER_DIAMETER_PX = 5.0
MIN_BLOB_AREA_PX = 4
MAX_REGION_COUNT = 12

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(eq=False)
class Scene:
    """A grayscale raster plus its physical pixel pitch in microns."""

    pixels: np.ndarray
    scale: float  # microns per pixel

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 2:
            raise ValueError("scene pixels must be a 2-D array")
        if self.pixels.dtype != np.uint8:
            self.pixels = self.pixels.astype(np.uint8)
        if self.width < 16 or self.height < 16:
            raise ValueError(f"scene must be at least 16x16, got {self.width}x{self.height}")
        if not (self.scale > 0):
            raise ValueError("scale must be positive microns per pixel")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(eq=False)
class Blob:
    """One detected bright region.

    ``pixel_set`` holds (x, y) integer pixel coordinates.  ``contour`` is the
    ordered boundary-pixel polygon (centers, counterclockwise by shoelace
    sign, closing edge implicit).
    """

    pixel_set: set = field(repr=False)
    contour: np.ndarray = field(repr=False)

    @property
    def area(self) -> int:
        return len(self.pixel_set)

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        xs = [p[0] for p in self.pixel_set]
        ys = [p[1] for p in self.pixel_set]
        return min(xs), min(ys), max(xs), max(ys)


def generate_synthetic_scene(
    width: int,
    height: int,
    scale: float,
    region_count: int,
    seed: int,
    separation: float = 2.0 * DEFAULT_LASER_DIAMETER_PX,
) -> Scene:
    """Render ``region_count`` elliptical bright patches on a uniform dark field.

    Patches are pairwise separated by at least ``separation`` pixels
    (conservative bounding-circle check) and stay clear of the image border.
    Deterministic for a fixed seed.  Raises PlacementError when the scene
    cannot fit the requested count.
    """
    if region_count < 0 or region_count > MAX_REGION_COUNT:
        raise ValueError(f"region_count must be in 0..{MAX_REGION_COUNT}, got {region_count}")
    img = np.full((height, width), BACKGROUND_INTENSITY, dtype=np.uint8)
    scene = Scene(img, scale)  # validates dimensions and scale early
    if region_count == 0:
        return scene

    rng = np.random.default_rng(seed)
    placed: list[tuple[float, float, float]] = []  # (cx, cy, bounding radius)
    ys, xs = np.mgrid[0:height, 0:width]
    attempts = 0
    max_attempts = 500 * region_count
    while len(placed) < region_count:
        if attempts >= max_attempts:
            raise PlacementError(
                f"cannot place regions: {len(placed)} of {region_count} fitted "
                f"in {width}x{height} after {attempts} attempts"
            )
        attempts += 1
        semi_major = rng.uniform(7.0, 14.0)
        semi_minor = max(3.0, semi_major / rng.uniform(1.3, 2.5))
        angle = rng.uniform(0.0, math.pi)
        border = semi_major + 3.0
        if 2 * border >= min(width, height):
            raise PlacementError("cannot place regions: scene too small for patch size")
        cx = rng.uniform(border, width - 1 - border)
        cy = rng.uniform(border, height - 1 - border)
        ok = all(
            math.hypot(cx - px, cy - py) >= semi_major + pr + separation
            for px, py, pr in placed
        )
        if not ok:
            continue
        intensity = int(rng.integers(REGION_INTENSITY_MIN, REGION_INTENSITY_MAX + 1))
        ca, sa = math.cos(angle), math.sin(angle)
        u = (xs - cx) * ca + (ys - cy) * sa
        v = -(xs - cx) * sa + (ys - cy) * ca
        mask = (u / semi_major) ** 2 + (v / semi_minor) ** 2 <= 1.0
        img[mask] = intensity
        placed.append((cx, cy, semi_major))
    return scene


# Moore neighborhood in clockwise order for image coordinates (x right, y down),
# starting East.
_MOORE = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
_MOORE_INDEX = {d: i for i, d in enumerate(_MOORE)}


def _trace_boundary(mask: np.ndarray) -> list[tuple[int, int]]:
    """Moore-neighbor boundary trace of the single foreground component in mask.

    ``mask`` is a bool array indexed [y, x] with a one-pixel background pad,
    so neighbor lookups never leave the array.  Returns ordered boundary pixel
    coordinates; the walk stops when it is about to repeat its first move
    (Jacob's stopping criterion).
    """
    ys, xs = np.nonzero(mask)
    first = int(np.lexsort((xs, ys))[0])  # topmost, then leftmost
    start = (int(xs[first]), int(ys[first]))
    contour = [start]
    cur = start
    backtrack = 4  # W of the start pixel is guaranteed background
    first_move = None
    limit = 4 * len(xs) + 8
    for _ in range(limit):
        nxt = None
        for step in range(1, 9):
            k = (backtrack + step) % 8
            dx, dy = _MOORE[k]
            cand = (cur[0] + dx, cur[1] + dy)
            if mask[cand[1], cand[0]]:
                nxt = (cand, k, (backtrack + step - 1) % 8)
                break
        if nxt is None:
            return contour  # isolated pixel
        (cand, k, prev_k) = nxt
        if first_move is None:
            first_move = (cur, cand)
        elif (cur, cand) == first_move:
            return contour[:-1] if contour[-1] == start and len(contour) > 1 else contour
        contour.append(cand)
        # New backtrack: direction from the new pixel to the last background
        # neighbor scanned, always a king move between consecutive neighbors.
        bg = (cur[0] + _MOORE[prev_k][0], cur[1] + _MOORE[prev_k][1])
        backtrack = _MOORE_INDEX[(bg[0] - cand[0], bg[1] - cand[1])]
        cur = cand
    raise RuntimeError("boundary trace failed to terminate")


def _contour_of(component_mask: np.ndarray) -> np.ndarray:
    padded = np.zeros(
        (component_mask.shape[0] + 2, component_mask.shape[1] + 2), dtype=bool
    )
    padded[1:-1, 1:-1] = component_mask
    pts = np.asarray(_trace_boundary(padded), dtype=float) - 1.0
    if len(pts) >= 3 and signed_area(pts) < 0:
        pts = pts[::-1].copy()
    return pts


def detect_regions(
    scene: Scene,
    threshold: int = DEFAULT_THRESHOLD,
    region_cap: int = REGION_INTENSITY_MAX,
    min_area: int = MIN_BLOB_AREA_PX,
) -> list[Blob]:
    """Find bright regions as 8-connected components of the region intensity band.

    Pixels with ``threshold <= value <= region_cap`` are foreground; the cap
    keeps the reserved laser band out of region detection.  Components smaller
    than ``min_area`` pixels are dropped.  Blobs come back sorted by the
    (min y, min x) corner of their bounding boxes.
    """
    if not (0 < threshold < 255):
        raise ValueError(f"threshold must be in 1..254, got {threshold}")
    mask = (scene.pixels >= threshold) & (scene.pixels <= region_cap)
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    blobs = []
    for index in range(1, count + 1):
        component = labels == index
        ys, xs = np.nonzero(component)
        if len(xs) < min_area:
            continue
        pixel_set = set(zip(xs.tolist(), ys.tolist()))
        blobs.append(Blob(pixel_set=pixel_set, contour=_contour_of(component)))
    blobs.sort(key=lambda b: (b.bbox[1], b.bbox[0]))
    return blobs


def detect_laser_spot(scene: Scene, spot_intensity: int = LASER_INTENSITY_MIN) -> np.ndarray:
    """Intensity-weighted centroid of the single component at or above spot_intensity."""
    mask = scene.pixels >= spot_intensity
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count != 1:
        raise LaserSpotError(f"laser spot not uniquely detected: {count} candidates")
    ys, xs = np.nonzero(mask)
    w = scene.pixels[ys, xs].astype(float)
    total = w.sum()
    return np.array([float(xs @ w) / total, float(ys @ w) / total])


def add_laser_spot(
    scene: Scene,
    position,
    diameter: float = DEFAULT_LASER_DIAMETER_PX,
    intensity: int = 255,
) -> Scene:
    """Return a copy of the scene with a filled laser disc stamped at position."""
    if not (LASER_INTENSITY_MIN <= intensity <= 255):
        raise ValueError(
            f"laser intensity must be in {LASER_INTENSITY_MIN}..255, got {intensity}"
        )
    px, py = float(position[0]), float(position[1])
    img = scene.pixels.copy()
    ys, xs = np.mgrid[0 : scene.height, 0 : scene.width]
    img[(xs - px) ** 2 + (ys - py) ** 2 <= (diameter / 2.0) ** 2] = intensity
    return Scene(img, scene.scale)


def load_scene(path, scale: float) -> Scene:
    from .pgm import read_pgm

    return Scene(read_pgm(path), scale)


def save_scene(scene: Scene, path) -> None:
    from .pgm import write_pgm

    write_pgm(path, scene.pixels)
