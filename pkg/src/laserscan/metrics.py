"""Run quality metrics: tracking error statistics and ablation coverage.

Primary error statistics are computed over ablation-phase iterations only
(travel legs reposition the spot and would skew them); whole-path numbers
and the perpendicular distance to the active curve are kept as secondary
fields on the report.  Coverage rasterises the union of laser discs centred
on every logged ablation position against each region's pixel set.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .servo_sim import TrajectoryLog, ablation_samples, flatten_path

REPORT_COLUMNS = [
    "test",
    "regions",
    "mean_error_um",
    "std_um",
    "cover_pct",
    "tour_len_px",
    "iters",
]


@dataclass(eq=False)
class RunReport:
    """Summary of one scenario run (distances in microns unless noted)."""

    test_label: str
    region_count: int
    mean_error_um: float
    std_error_um: float
    coverage_percent: float
    tour_length_px: float
    iterations: int
    coverage_per_region: list = field(default_factory=list)
    whole_path_mean_um: float = 0.0
    whole_path_std_um: float = 0.0
    curve_deviation_um: float = 0.0


def tracking_error_stats(
    log: TrajectoryLog, path, scale: float, ablate_only: bool = True
) -> tuple[float, float]:
    """Mean and population standard deviation of the per-iteration error, in microns.

    Error is recomputed as the distance from the logged position to the
    active waypoint of the row.
    """
    if not (scale > 0):
        raise ValueError("scale must be positive microns per pixel")
    targets, _, _ = flatten_path(path)
    rows = ablation_samples(log) if ablate_only else np.arange(len(log))
    if rows.size == 0:
        raise ValueError("trajectory log is empty")
    d = np.hypot(*(log.positions[rows] - targets[log.waypoints[rows]]).T)
    return float(d.mean() * scale), float(d.std() * scale)


def curve_deviation_stats(log: TrajectoryLog, path, scale: float) -> float:
    """Mean perpendicular distance from ablation samples to their active curve."""
    _, _, owner = flatten_path(path)
    rows = ablation_samples(log)
    total = 0.0
    for i in rows:
        line = path[owner[log.waypoints[i]]]
        a = line.points[:-1]
        b = line.points[1:]
        if len(a) == 0:
            a = b = line.points
        p = log.positions[i]
        ab = b - a
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.clip(
            np.einsum("ij,ij->i", p - a, ab) / np.where(denom == 0, 1.0, denom), 0, 1
        )
        total += float(np.min(np.hypot(*(p - (a + t[:, None] * ab)).T)))
    return total / rows.size * scale


def _covered_count(blob, positions: np.ndarray, laser_diameter: float) -> int:
    if positions.size == 0:
        return 0
    pix = np.asarray(sorted(blob.pixel_set), dtype=float)
    r2 = (laser_diameter / 2.0) ** 2
    covered = np.zeros(len(pix), dtype=bool)
    # Chunk the distance matrix to keep memory bounded on long logs.
    for lo in range(0, len(positions), 4096):
        chunk = positions[lo : lo + 4096]
        d2 = (pix[:, None, 0] - chunk[None, :, 0]) ** 2 + (
            pix[:, None, 1] - chunk[None, :, 1]
        ) ** 2
        covered |= (d2 <= r2).any(axis=1)
        if covered.all():
            break
    return int(covered.sum())


def coverage(blob, log: TrajectoryLog, laser_diameter: float) -> float:
    """Percentage of blob pixels whose center lies within one laser radius
    of some ablation-phase position."""
    if not (laser_diameter > 0):
        raise ValueError("laser_diameter must be positive")
    if blob.area == 0:
        raise ValueError("blob has no pixels")
    positions = log.positions[log.laser_on]
    return 100.0 * _covered_count(blob, positions, laser_diameter) / blob.area


def build_report(
    test_label: str,
    blobs,
    tour_length_px: float,
    path,
    log: TrajectoryLog,
    scale: float,
    laser_diameter: float,
) -> RunReport:
    mean_um, std_um = tracking_error_stats(log, path, scale)
    whole_mean, whole_std = tracking_error_stats(log, path, scale, ablate_only=False)
    positions = log.positions[log.laser_on]
    per_region = []
    covered_total = 0
    area_total = 0
    for blob in blobs:
        hit = _covered_count(blob, positions, laser_diameter)
        per_region.append(100.0 * hit / blob.area)
        covered_total += hit
        area_total += blob.area
    return RunReport(
        test_label=test_label,
        region_count=len(blobs),
        mean_error_um=mean_um,
        std_error_um=std_um,
        coverage_percent=100.0 * covered_total / area_total if area_total else 0.0,
        tour_length_px=tour_length_px,
        iterations=len(log),
        coverage_per_region=per_region,
        whole_path_mean_um=whole_mean,
        whole_path_std_um=whole_std,
        curve_deviation_um=curve_deviation_stats(log, path, scale),
    )


def report_row(report: RunReport) -> list[str]:
    """CSV cells for one report, full float precision for exact re-reading."""
    return [
        report.test_label,
        str(report.region_count),
        repr(float(report.mean_error_um)),
        repr(float(report.std_error_um)),
        repr(float(report.coverage_percent)),
        repr(float(report.tour_length_px)),
        str(report.iterations),
    ]


def write_report_csv(path, reports) -> None:
    lines = [",".join(REPORT_COLUMNS)]
    lines += [",".join(report_row(r)) for r in reports]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
