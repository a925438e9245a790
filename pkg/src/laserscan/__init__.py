"""Laser scanning planner and closed-loop tracking simulator.

Pipeline: detect bright regions in a grayscale scene, fit a principal-axis
frame per region, lay a sinusoidal sweep curve across each one, order the
visits by shortest total travel, then drive a simulated spot controller along
the composite path and report tracking accuracy and coverage.
"""
from .errors import (
    ConfigError,
    DegenerateRegionError,
    DetectionError,
    LaserSpotError,
    NoAblationError,
    PlacementError,
    ScanError,
    SingularInteractionError,
    StalledWaypointError,
    TourSizeError,
)
from .scene import (
    Blob,
    Scene,
    add_laser_spot,
    detect_laser_spot,
    detect_regions,
    generate_synthetic_scene,
    load_scene,
    save_scene,
)
from .region_geometry import (
    PcaFrame,
    RegionPlan,
    centroid,
    entry_exit_points,
    from_frame,
    pca_frame,
    plan_region,
    plan_regions,
    reproject,
)
from .intra_path import (
    ABLATE,
    TRAVEL,
    Polyline,
    clip_to_region,
    region_scan_curve,
    sinusoid_in_frame,
    straight_travel,
    to_image_frame,
    validate_polyline,
)
from .tour import (
    NodeSet,
    Tour,
    build_nodes,
    dump_nodes,
    parse_nodes,
    solve_brute_force,
    solve_exact,
    solve_heuristic,
    tour_length,
    validate_tour,
)
from .servo_sim import (
    ControllerConfig,
    PlantModel,
    TrajectoryLog,
    ablation_samples,
    control_law,
    follow_path,
    step_plant,
    visual_error,
)
from .metrics import (
    RunReport,
    build_report,
    coverage,
    curve_deviation_stats,
    tracking_error_stats,
    write_report_csv,
)
from .cli import ScenarioConfig, main, parse_config, run_batch, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ABLATE",
    "Blob",
    "ConfigError",
    "ControllerConfig",
    "DegenerateRegionError",
    "DetectionError",
    "LaserSpotError",
    "NoAblationError",
    "NodeSet",
    "PcaFrame",
    "PlacementError",
    "PlantModel",
    "Polyline",
    "RegionPlan",
    "RunReport",
    "ScanError",
    "Scene",
    "ScenarioConfig",
    "SingularInteractionError",
    "StalledWaypointError",
    "Tour",
    "TourSizeError",
    "TrajectoryLog",
    "TRAVEL",
    "ablation_samples",
    "add_laser_spot",
    "build_nodes",
    "build_report",
    "centroid",
    "clip_to_region",
    "control_law",
    "coverage",
    "curve_deviation_stats",
    "detect_laser_spot",
    "detect_regions",
    "dump_nodes",
    "entry_exit_points",
    "follow_path",
    "from_frame",
    "generate_synthetic_scene",
    "load_scene",
    "main",
    "parse_config",
    "parse_nodes",
    "pca_frame",
    "plan_region",
    "plan_regions",
    "region_scan_curve",
    "reproject",
    "run_batch",
    "run_scenario",
    "save_scene",
    "sinusoid_in_frame",
    "solve_brute_force",
    "solve_exact",
    "solve_heuristic",
    "step_plant",
    "straight_travel",
    "to_image_frame",
    "tour_length",
    "tracking_error_stats",
    "validate_polyline",
    "validate_tour",
    "visual_error",
    "write_report_csv",
]
