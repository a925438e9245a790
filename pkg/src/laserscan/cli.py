"""Scenario driver and command-line interface.

A scenario is described by a flat ``key = value`` config file ('#' starts a
comment, unknown keys are rejected).  The driver generates or loads a scene,
detects regions and the laser spot, plans the visit order and the per-region
sweep curves, runs the closed-loop tracking simulation, and writes reports
and renders into the output directory.  Identical config plus seed yields
byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import metrics, pgm, scene as scene_mod, servo_sim, tour as tour_mod
from .errors import ConfigError, DetectionError, PlacementError, ScanError
from .intra_path import Polyline, region_scan_curve, straight_travel
from .region_geometry import plan_regions
from .servo_sim import ControllerConfig, PlantModel, follow_path

PLANNED_INTENSITY = 200
EXECUTED_TRAVEL_INTENSITY = 220
EXECUTED_ABLATE_INTENSITY = 255
SCENE_REMAP_MAX = 180

_SOLVERS = {
    "exact": tour_mod.solve_exact,
    "heuristic": tour_mod.solve_heuristic,
    "brute": tour_mod.solve_brute_force,
}

# Region counts mirroring the reference ten-scenario evaluation layout.
DEFAULT_BATCH_COUNTS = (3, 3, 4, 4, 5, 5, 3, 3, 4, 4)


@dataclass
class ScenarioConfig:
    """All tunables of a single scenario run."""

    scene: str = "synthetic"  # 'synthetic' or a PGM path
    width: int = 768
    height: int = 576
    region_count: int = 5
    scale: float = 120.0  # microns per pixel
    threshold: int = 128
    spot_threshold: int = 250
    d_laser: float = 5.0  # px
    step: float = 0.5  # px waypoint spacing
    solver: str = "exact"
    gain: float = 4.0  # config key 'lambda'; controller gain, 1/s
    convergence_threshold: float = 1.0  # px
    dt: float = 0.1  # s
    plant: str = "saturated_deadband"
    rate_limit: float = 25.0  # px/s
    deadband: float = 0.05  # px/s
    seed: int = 0
    out: str = "out"
    max_iter_per_waypoint: int = 2000


_KEY_TO_FIELD = {"lambda": "gain"}
_FIELD_TO_KEY = {"gain": "lambda"}


def parse_config(path) -> ScenarioConfig:
    """Read a flat key = value file into a ScenarioConfig."""
    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
    values = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value', got {raw!r}")
        key, text = (s.strip() for s in line.split("=", 1))
        name = _KEY_TO_FIELD.get(key, key)
        if name not in fields:
            raise ConfigError(f"{path}:{ln}: unknown config key {key!r}")
        ftype = fields[name].type
        try:
            if ftype == "int":
                values[name] = int(text)
            elif ftype == "float":
                values[name] = float(text)
            else:
                values[name] = text
        except ValueError as exc:
            raise ConfigError(f"{path}:{ln}: bad value for {key!r}: {exc}") from exc
    return ScenarioConfig(**values)


def dump_config(config: ScenarioConfig) -> str:
    lines = []
    for f in dataclasses.fields(ScenarioConfig):
        key = _FIELD_TO_KEY.get(f.name, f.name)
        lines.append(f"{key} = {getattr(config, f.name)}")
    return "\n".join(lines) + "\n"


@dataclass(eq=False)
class ScenarioResult:
    config: ScenarioConfig
    scene: scene_mod.Scene
    blobs: list
    plans: list
    nodes: tour_mod.NodeSet
    tour: tour_mod.Tour
    path: list
    log: servo_sim.TrajectoryLog
    report: metrics.RunReport
    out_dir: Path


def _place_laser(scene, blobs, d_laser, seed) -> np.ndarray:
    """Random spot position clear of every blob and the border."""
    rng = np.random.default_rng(seed + 1)
    clearance = 2.0 * d_laser
    border = d_laser
    circles = []
    for b in blobs:
        x0, y0, x1, y1 = b.bbox
        cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
        circles.append((cx, cy, math.hypot(x1 - x0, y1 - y0) / 2.0 + d_laser / 2.0))
    for _ in range(2000):
        p = rng.uniform(
            [border, border], [scene.width - 1 - border, scene.height - 1 - border]
        )
        if all(math.hypot(p[0] - cx, p[1] - cy) >= r + clearance for cx, cy, r in circles):
            return p
    raise PlacementError("cannot place laser spot clear of regions")


def prepare_scene(config: ScenarioConfig):
    """Build or load the scene and locate the laser spot.

    Synthetic scenes get a spot stamped at a seeded random free position; the
    spot is then re-detected from the raster so the pipeline always starts
    from the measured position.
    """
    if config.scene == "synthetic":
        base = scene_mod.generate_synthetic_scene(
            config.width, config.height, config.scale, config.region_count, config.seed
        )
        blobs = scene_mod.detect_regions(base, config.threshold)
        pos = _place_laser(base, blobs, config.d_laser, config.seed)
        stamped = scene_mod.add_laser_spot(base, pos, config.d_laser)
    else:
        stamped = scene_mod.load_scene(config.scene, config.scale)
    laser = scene_mod.detect_laser_spot(stamped, config.spot_threshold)
    blobs = scene_mod.detect_regions(stamped, config.threshold)
    return stamped, blobs, laser


def assemble_scan_path(laser_position, plans, visit: tour_mod.Tour, d_laser, step):
    """Interleave travel legs and region sweep curves along the tour order."""
    segments: list[Polyline] = []
    pos = np.asarray(laser_position, dtype=float)
    seq = visit.sequence
    for i in range(1, len(seq), 2):
        entry_id = seq[i]
        region = (entry_id + 1) // 2
        curve = region_scan_curve(plans[region - 1], d_laser, step)
        if entry_id % 2 == 0:  # region traversed exit-to-entry
            curve = Polyline(curve.points[::-1].copy(), curve.mode)
        if float(np.hypot(*(curve.points[0] - pos))) > 1e-9:
            segments.append(straight_travel(pos, curve.points[0], step))
        segments.append(curve)
        pos = curve.points[-1]
    return segments


def _remap_base(scene) -> np.ndarray:
    return np.round(scene.pixels.astype(float) * (SCENE_REMAP_MAX / 255.0)).astype(
        np.uint8
    )


def _overdraw(img: np.ndarray, points: np.ndarray, value: int) -> None:
    if len(points) == 0:
        return
    ij = np.rint(np.asarray(points, dtype=float)).astype(int)
    keep = (
        (ij[:, 0] >= 0)
        & (ij[:, 0] < img.shape[1])
        & (ij[:, 1] >= 0)
        & (ij[:, 1] < img.shape[0])
    )
    ij = ij[keep]
    img[ij[:, 1], ij[:, 0]] = value


def render_planned(scene, path) -> np.ndarray:
    img = _remap_base(scene)
    for line in path:
        _overdraw(img, line.points, PLANNED_INTENSITY)
    return img


def render_executed(scene, path, log) -> np.ndarray:
    img = render_planned(scene, path)
    _overdraw(img, log.positions[~log.laser_on], EXECUTED_TRAVEL_INTENSITY)
    _overdraw(img, log.positions[log.laser_on], EXECUTED_ABLATE_INTENSITY)
    return img


def _validated(config: ScenarioConfig) -> ScenarioConfig:
    if config.solver not in _SOLVERS:
        raise ConfigError(f"unknown solver {config.solver!r} (expected exact/heuristic/brute)")
    if config.plant not in (servo_sim.IDEAL, servo_sim.SATURATED_DEADBAND):
        raise ConfigError(f"unknown plant {config.plant!r}")
    return config


def plan_scenario(config: ScenarioConfig, write: bool = True):
    """Run the pipeline up to the planned path (no simulation)."""
    config = _validated(config)
    scn, blobs, laser = prepare_scene(config)
    if not blobs:
        raise DetectionError("no regions detected")
    plans = plan_regions(blobs)
    nodes = tour_mod.build_nodes(laser, plans)
    visit = _SOLVERS[config.solver](nodes)
    path = assemble_scan_path(laser, plans, visit, config.d_laser, config.step)
    out_dir = Path(config.out)
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
        pgm.write_pgm(out_dir / "planned.pgm", render_planned(scn, path))
        (out_dir / "nodes.txt").write_text(tour_mod.dump_nodes(nodes))
    return scn, blobs, plans, nodes, visit, path, laser


def run_scenario(config: ScenarioConfig, label: str = "1", write: bool = True) -> ScenarioResult:
    """Full pipeline: plan, simulate, measure, write artifacts."""
    scn, blobs, plans, nodes, visit, path, laser = plan_scenario(config, write=write)
    controller = ControllerConfig(
        gain=config.gain,
        convergence_threshold=config.convergence_threshold,
        dt=config.dt,
    )
    plant = PlantModel(
        kind=config.plant, rate_limit=config.rate_limit, deadband=config.deadband
    )
    log = follow_path(
        path, controller, plant, laser, max_iter_per_waypoint=config.max_iter_per_waypoint
    )
    report = metrics.build_report(
        label, blobs, visit.total_length, path, log, config.scale, config.d_laser
    )
    out_dir = Path(config.out)
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
        scene_mod.save_scene(scn, out_dir / "scene.pgm")
        log.write_csv(out_dir / "trajectory.csv")
        metrics.write_report_csv(out_dir / "report.csv", [report])
        pgm.write_pgm(out_dir / "executed.pgm", render_executed(scn, path, log))
    return ScenarioResult(
        config=config,
        scene=scn,
        blobs=blobs,
        plans=plans,
        nodes=nodes,
        tour=visit,
        path=path,
        log=log,
        report=report,
        out_dir=out_dir,
    )


@dataclass(eq=False)
class BatchEntry:
    label: str
    config: ScenarioConfig
    result: ScenarioResult | None = None
    error: str | None = None


def run_batch(config: ScenarioConfig, tests, out_dir=None) -> list[BatchEntry]:
    """Run one scenario per (region_count, seed) pair and write the aggregate CSV.

    Each entry writes into its own subdirectory of ``out_dir``; failures are
    recorded per row and do not abort the batch.  The batch CSV mirrors the
    single-run report columns plus a status column and ends with an 'average'
    row over the successful runs.
    """
    tests = list(tests)
    if not tests:
        raise ConfigError("batch requires at least one test")
    base = Path(out_dir if out_dir is not None else config.out)
    entries: list[BatchEntry] = []
    for i, (count, seed) in enumerate(tests, 1):
        label = str(i)
        sub = replace(
            config,
            scene="synthetic",
            region_count=int(count),
            seed=int(seed),
            out=str(base / f"test_{i:02d}"),
        )
        entry = BatchEntry(label=label, config=sub)
        try:
            entry.result = run_scenario(sub, label=label)
        except (ScanError, ValueError) as exc:
            entry.error = f"{exc}"
        entries.append(entry)

    base.mkdir(parents=True, exist_ok=True)
    lines = [",".join(metrics.REPORT_COLUMNS + ["status"])]
    ok = [e.result.report for e in entries if e.result is not None]
    for e in entries:
        if e.result is not None:
            lines.append(",".join(metrics.report_row(e.result.report) + ["ok"]))
        else:
            cells = [e.label, str(e.config.region_count)] + [""] * 4 + [""]
            lines.append(",".join(cells + [f"error: {e.error}"]))
    if ok:
        def mean(vals):
            return repr(float(sum(vals) / len(vals)))

        avg = [
            "average",
            mean([r.region_count for r in ok]),
            mean([r.mean_error_um for r in ok]),
            mean([r.std_error_um for r in ok]),
            mean([r.coverage_percent for r in ok]),
            mean([r.tour_length_px for r in ok]),
            mean([r.iterations for r in ok]),
            "ok",
        ]
        lines.append(",".join(avg))
    with open(base / "batch_report.csv", "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return entries


def _parse_tests(text: str, base_seed: int) -> list[tuple[int, int]]:
    counts = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            counts.append(int(tok))
        except ValueError as exc:
            raise ConfigError(f"bad --tests entry {tok!r}: {exc}") from exc
    return [(c, base_seed + i) for i, c in enumerate(counts)]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laserscan",
        description="Plan and simulate laser scanning of bright regions in a grayscale scene.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("plan", "detect regions and write the planned path render"),
        ("run", "full pipeline: plan, simulate, report"),
        ("batch", "run a list of synthetic scenarios and aggregate results"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", metavar="PATH", help="scenario config file")
        sp.add_argument("--seed", type=int, metavar="N", help="override the RNG seed")
        sp.add_argument("--out", metavar="DIR", help="override the output directory")
        sp.add_argument(
            "--solver",
            choices=sorted(_SOLVERS),
            help="override the tour solver",
        )
        if name == "batch":
            sp.add_argument(
                "--tests",
                default=",".join(str(c) for c in DEFAULT_BATCH_COUNTS),
                metavar="COUNTS",
                help="comma-separated region counts, one scenario each "
                "(seeds run from --seed upward)",
            )
    return parser


def _config_from_args(args) -> ScenarioConfig:
    config = parse_config(args.config) if args.config else ScenarioConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out is not None:
        config = replace(config, out=args.out)
    if args.solver is not None:
        config = replace(config, solver=args.solver)
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "plan":
            _, _, _, nodes, visit, _, _ = plan_scenario(config)
            print(f"tour {visit.sequence} length {visit.total_length:.3f} px")
        elif args.command == "run":
            result = run_scenario(config)
            r = result.report
            print(
                f"regions {r.region_count} mean_error {r.mean_error_um:.2f} um "
                f"std {r.std_error_um:.2f} um coverage {r.coverage_percent:.2f}% "
                f"iters {r.iterations}"
            )
        else:
            entries = run_batch(config, _parse_tests(args.tests, config.seed))
            failures = [e for e in entries if e.error is not None]
            for e in entries:
                status = "ok" if e.result else f"error: {e.error}"
                print(f"test {e.label}: {status}")
            if failures:
                raise ScanError(f"{len(failures)} of {len(entries)} batch tests failed")
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
