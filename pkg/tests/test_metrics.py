"""Tracking-error statistics, coverage measurement and report serialization."""
import csv
import math

import numpy as np
import pytest

from laserscan.errors import NoAblationError
from laserscan.intra_path import ABLATE, TRAVEL, Polyline, sinusoid_in_frame, straight_travel
from laserscan.metrics import (
    REPORT_COLUMNS,
    RunReport,
    build_report,
    coverage,
    curve_deviation_stats,
    tracking_error_stats,
    write_report_csv,
)
from laserscan.servo_sim import IDEAL, ControllerConfig, PlantModel, TrajectoryLog, follow_path


def make_log(positions, waypoints, laser_on, dt=0.1):
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    return TrajectoryLog(
        iterations=np.arange(n),
        time_s=(np.arange(n) + 1) * dt,
        positions=positions,
        waypoints=np.asarray(waypoints, dtype=int),
        errors=np.zeros(n),
        commands=np.zeros((n, 2)),
        laser_on=np.asarray(laser_on, dtype=bool),
    )


class GridBlob:
    """Stand-in blob: an axis-aligned rectangle of pixels."""

    def __init__(self, x0, y0, w, h):
        self.pixel_set = {(x, y) for x in range(x0, x0 + w) for y in range(y0, y0 + h)}
        xs = [p[0] for p in self.pixel_set]
        ys = [p[1] for p in self.pixel_set]
        self.contour = np.array(
            [
                [min(xs), min(ys)],
                [max(xs), min(ys)],
                [max(xs), max(ys)],
                [min(xs), max(ys)],
            ],
            dtype=float,
        )

    @property
    def area(self):
        return len(self.pixel_set)


def coverage_oracle(blob, positions, diameter):
    """Per-pixel scan with scalar math; the implementation vectorizes."""
    if len(positions) == 0:
        return 0.0
    r = diameter / 2.0
    hit = 0
    for x, y in blob.pixel_set:
        if any(math.hypot(x - px, y - py) <= r for px, py in positions):
            hit += 1
    return 100.0 * hit / len(blob.pixel_set)


def test_tracking_stats_hand_values():
    # Two ablation rows at 1 px and 3 px from their waypoints; 120 um/px.
    path = [Polyline(np.array([[0.0, 0.0], [10.0, 0.0]]), ABLATE)]
    log = make_log(
        positions=[[0.0, 1.0], [10.0, 3.0]], waypoints=[0, 1], laser_on=[True, True]
    )
    mean_um, std_um = tracking_error_stats(log, path, scale=120.0)
    assert mean_um == pytest.approx(240.0, abs=1e-9)
    assert std_um == pytest.approx(120.0, abs=1e-9)  # population std of {1, 3} is 1


def test_tracking_stats_zero_error():
    path = [Polyline(np.array([[0.0, 0.0], [1.0, 0.0]]), ABLATE)]
    log = make_log(positions=[[0.0, 0.0], [1.0, 0.0]], waypoints=[0, 1], laser_on=[True, True])
    assert tracking_error_stats(log, path, scale=120.0) == (0.0, 0.0)


def test_tracking_stats_ablate_only_vs_whole_path():
    path = [
        Polyline(np.array([[0.0, 0.0], [5.0, 0.0]]), TRAVEL),
        Polyline(np.array([[5.0, 0.0], [6.0, 0.0]]), ABLATE),
    ]
    log = make_log(
        positions=[[0.0, 4.0], [5.0, 0.0], [5.0, 1.0], [6.0, 1.0]],
        waypoints=[0, 1, 2, 3],
        laser_on=[False, False, True, True],
    )
    ablate_mean, _ = tracking_error_stats(log, path, scale=120.0)
    whole_mean, _ = tracking_error_stats(log, path, scale=120.0, ablate_only=False)
    assert ablate_mean == pytest.approx(120.0, abs=1e-9)
    assert whole_mean == pytest.approx(120.0 * (4 + 0 + 1 + 1) / 4, abs=1e-9)


def test_tracking_stats_survive_csv_round_trip(tmp_path):
    # Stats recomputed from the serialized log must agree with the live run;
    # repr-formatted floats make the agreement exact rather than approximate.
    travel = straight_travel(np.zeros(2), np.array([8.0, 3.0]), step=0.5)
    sweep = sinusoid_in_frame(10.0, 4.0, 5.0, 0.5)
    sweep = Polyline(sweep.points + np.array([8.0, 3.0]), ABLATE)
    ctrl = ControllerConfig(gain=4.0, convergence_threshold=1.0, dt=0.1)
    log = follow_path([travel, sweep], ctrl, PlantModel(kind=IDEAL), np.zeros(2))

    csv_path = tmp_path / "trajectory.csv"
    log.write_csv(csv_path)
    reread = TrajectoryLog.read_csv(csv_path)

    live = tracking_error_stats(log, [travel, sweep], scale=120.0)
    refetched = tracking_error_stats(reread, [travel, sweep], scale=120.0)
    assert abs(live[0] - refetched[0]) < 1e-9
    assert abs(live[1] - refetched[1]) < 1e-9


def test_tracking_stats_require_ablation_rows():
    path = [Polyline(np.array([[0.0, 0.0], [5.0, 0.0]]), TRAVEL)]
    log = make_log(positions=[[0.0, 0.0]], waypoints=[0], laser_on=[False])
    with pytest.raises(NoAblationError):
        tracking_error_stats(log, path, scale=120.0)
    with pytest.raises(ValueError):
        tracking_error_stats(log, path, scale=-1.0)


def test_curve_deviation_measures_distance_to_segments():
    path = [Polyline(np.array([[0.0, 0.0], [10.0, 0.0]]), ABLATE)]
    log = make_log(
        positions=[[2.0, 0.5], [7.0, -0.25]], waypoints=[0, 1], laser_on=[True, True]
    )
    dev_um = curve_deviation_stats(log, path, scale=120.0)
    assert dev_um == pytest.approx(120.0 * (0.5 + 0.25) / 2, abs=1e-9)


def test_coverage_matches_bruteforce_oracle():
    blob = GridBlob(10, 20, 12, 7)
    rng = np.random.default_rng(0)
    positions = rng.uniform([8, 18], [24, 29], size=(15, 2))
    log = make_log(positions, np.zeros(15), np.ones(15))
    got = coverage(blob, log, laser_diameter=5.0)
    want = coverage_oracle(blob, positions, 5.0)
    assert got == pytest.approx(want, abs=1e-9)


def test_coverage_single_spot_radius():
    blob = GridBlob(0, 0, 11, 11)
    log = make_log([[5.0, 5.0]], [0], [True])
    got = coverage(blob, log, laser_diameter=5.0)
    want = coverage_oracle(blob, [(5.0, 5.0)], 5.0)
    assert got == pytest.approx(want, abs=1e-9)
    assert 0.0 < got < 100.0


def test_coverage_full_grid_sweep():
    blob = GridBlob(3, 4, 9, 5)
    centers = np.array(sorted(blob.pixel_set), dtype=float)
    log = make_log(centers, np.zeros(len(centers)), np.ones(len(centers)))
    assert coverage(blob, log, laser_diameter=5.0) == 100.0


def test_coverage_ignores_laser_off_rows():
    blob = GridBlob(0, 0, 8, 8)
    log = make_log([[4.0, 4.0]], [0], [False])
    assert coverage(blob, log, laser_diameter=5.0) == 0.0


def test_coverage_monotone_in_positions():
    blob = GridBlob(0, 0, 20, 6)
    rng = np.random.default_rng(2)
    pts = rng.uniform([0, 0], [20, 6], size=(12, 2))
    prev = 0.0
    for k in range(1, 13):
        log = make_log(pts[:k], np.zeros(k), np.ones(k))
        cur = coverage(blob, log, laser_diameter=4.0)
        assert cur >= prev - 1e-12
        prev = cur


def test_coverage_translation_invariant():
    blob_a = GridBlob(0, 0, 10, 5)
    blob_b = GridBlob(30, 17, 10, 5)
    pts = np.array([[2.0, 2.0], [7.5, 3.5]])
    log_a = make_log(pts, [0, 0], [True, True])
    log_b = make_log(pts + [30.0, 17.0], [0, 0], [True, True])
    a = coverage(blob_a, log_a, laser_diameter=5.0)
    b = coverage(blob_b, log_b, laser_diameter=5.0)
    assert a == pytest.approx(b, abs=1e-12)


def test_coverage_validation():
    blob = GridBlob(0, 0, 5, 5)
    log = make_log([[1.0, 1.0]], [0], [True])
    with pytest.raises(ValueError):
        coverage(blob, log, laser_diameter=0.0)
    empty = GridBlob(0, 0, 5, 5)
    empty.pixel_set = set()
    with pytest.raises(ValueError):
        coverage(empty, log, laser_diameter=5.0)


def test_build_report_and_csv_round_trip(tmp_path):
    blob = GridBlob(2, 2, 10, 6)
    path = [
        Polyline(np.array([[0.0, 0.0], [2.0, 2.0]]), TRAVEL),
        Polyline(np.array([[2.0, 2.0], [11.0, 7.0]]), ABLATE),
    ]
    log = make_log(
        positions=[[0.5, 0.5], [2.0, 2.5], [11.0, 7.0]],
        waypoints=[0, 1, 1],
        laser_on=[False, True, True],
    )
    report = build_report("7", [blob], 42.5, path, log, scale=120.0, laser_diameter=5.0)
    assert report.test_label == "7"
    assert report.region_count == 1
    assert report.iterations == 3
    assert 0.0 <= report.coverage_percent <= 100.0
    assert report.whole_path_mean_um > 0.0
    assert report.curve_deviation_um >= 0.0

    out = tmp_path / "report.csv"
    write_report_csv(out, [report])
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == REPORT_COLUMNS
    assert rows[0]["test"] == "7"
    # Full-precision floats survive the round trip bit for bit.
    assert float(rows[0]["mean_error_um"]) == report.mean_error_um
    assert float(rows[0]["cover_pct"]) == report.coverage_percent
    assert float(rows[0]["tour_len_px"]) == 42.5
    assert int(rows[0]["iters"]) == 3


def test_report_columns_frozen():
    assert REPORT_COLUMNS == [
        "test",
        "regions",
        "mean_error_um",
        "std_um",
        "cover_pct",
        "tour_len_px",
        "iters",
    ]


def test_run_report_defaults():
    r = RunReport(
        test_label="x",
        region_count=2,
        mean_error_um=1.0,
        std_error_um=0.5,
        coverage_percent=99.0,
        tour_length_px=10.0,
        iterations=100,
    )
    assert r.coverage_per_region == []
    assert r.whole_path_mean_um == 0.0
