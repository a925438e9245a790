"""Closed-loop image-space tracking of the waypoint path.

The loop mirrors a camera-in-the-loop steering stack collapsed to two
degrees of freedom.  Per iteration: the image-space error between the spot
and the active waypoint feeds a proportional law through the pseudo-inverse
of the controller's interaction-matrix estimate; the resulting actuator-rate
command goes through the plant, whose true gain matrix maps actuator rates
to image velocity; friction-style limits (deadband, rate saturation) act on
that image velocity before integration.  With an exact estimate the realized
image velocity equals the commanded one, giving per-iteration error decay by
the factor (1 - gain * dt).

A waypoint is declared reached only when the error norm drops strictly below
the convergence threshold; the log records the post-step state of every
iteration, so the row where a waypoint is left is the row that satisfied the
threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoAblationError, SingularInteractionError, StalledWaypointError
from .intra_path import ABLATE, Polyline

_COND_LIMIT = 1e6

IDEAL = "ideal"
SATURATED_DEADBAND = "saturated_deadband"

CSV_HEADER = "iter,time_s,x_px,y_px,waypoint,err_px,vx,vy,laser_on"


def _identity() -> np.ndarray:
    return np.eye(2)


@dataclass(eq=False)
class ControllerConfig:
    """Proportional visual-servo controller parameters.

    ``gain`` is the exponential convergence rate in 1/s; keep gain * dt well
    under 1.  ``interaction_estimate`` is the controller's model of the
    actuator-rate to image-velocity map.  ``measurement_noise_px`` adds
    seeded Gaussian noise to the measured spot position (off by default).
    """

    gain: float = 0.5
    interaction_estimate: np.ndarray = field(default_factory=_identity)
    convergence_threshold: float = 1.0  # px
    dt: float = 0.1  # s
    measurement_noise_px: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        self.interaction_estimate = np.asarray(self.interaction_estimate, dtype=float)
        if self.interaction_estimate.shape != (2, 2):
            raise ValueError("interaction_estimate must be a 2x2 matrix")
        if not (self.gain > 0 and self.dt > 0 and self.convergence_threshold > 0):
            raise ValueError("gain, dt and convergence_threshold must be positive")
        if self.measurement_noise_px < 0:
            raise ValueError("measurement_noise_px must be non-negative")


@dataclass(eq=False)
class PlantModel:
    """Two-axis steering plant.

    ``gain_matrix`` is the true actuator-rate to image-velocity map.  The
    ``saturated_deadband`` kind models wire friction: realized image speed is
    zero below ``deadband`` and clamped to ``rate_limit`` above it, direction
    preserved.  The ``ideal`` kind realizes the mapped velocity as is.
    """

    kind: str = SATURATED_DEADBAND
    gain_matrix: np.ndarray = field(default_factory=_identity)
    rate_limit: float = 25.0  # px/s
    deadband: float = 0.05  # px/s

    def __post_init__(self):
        if self.kind not in (IDEAL, SATURATED_DEADBAND):
            raise ValueError(f"unknown plant kind {self.kind!r}")
        self.gain_matrix = np.asarray(self.gain_matrix, dtype=float)
        if self.gain_matrix.shape != (2, 2):
            raise ValueError("gain_matrix must be a 2x2 matrix")
        if np.linalg.cond(self.gain_matrix) >= _COND_LIMIT:
            raise ValueError("gain_matrix must be invertible")
        if self.kind == SATURATED_DEADBAND and not (self.rate_limit > self.deadband >= 0):
            raise ValueError("need rate_limit > deadband >= 0")


@dataclass(eq=False)
class TrajectoryLog:
    """Column-oriented record of one tracking run (one row per iteration)."""

    iterations: np.ndarray
    time_s: np.ndarray
    positions: np.ndarray
    waypoints: np.ndarray
    errors: np.ndarray
    commands: np.ndarray
    laser_on: np.ndarray

    def __len__(self) -> int:
        return len(self.iterations)

    def write_csv(self, path) -> None:
        def g(v: float) -> str:
            # repr round-trips exactly, so stats recomputed from the file
            # match the in-memory log bit for bit.
            return repr(float(v))

        lines = [CSV_HEADER]
        for i in range(len(self)):
            x, y = self.positions[i]
            vx, vy = self.commands[i]
            lines.append(
                f"{self.iterations[i]},{g(self.time_s[i])},{g(x)},{g(y)},"
                f"{self.waypoints[i]},{g(self.errors[i])},{g(vx)},{g(vy)},"
                f"{int(self.laser_on[i])}"
            )
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def read_csv(cls, path) -> "TrajectoryLog":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise ValueError(f"unexpected trajectory header: {header!r}")
            rows = [line.strip().split(",") for line in fh if line.strip()]
        return cls(
            iterations=np.array([int(r[0]) for r in rows], dtype=int),
            time_s=np.array([float(r[1]) for r in rows]),
            positions=np.array([[float(r[2]), float(r[3])] for r in rows]).reshape(-1, 2),
            waypoints=np.array([int(r[4]) for r in rows], dtype=int),
            errors=np.array([float(r[5]) for r in rows]),
            commands=np.array([[float(r[6]), float(r[7])] for r in rows]).reshape(-1, 2),
            laser_on=np.array([bool(int(r[8])) for r in rows], dtype=bool),
        )


def visual_error(current, desired) -> np.ndarray:
    """Image-space error vector: measured position minus target position."""
    return np.asarray(current, dtype=float) - np.asarray(desired, dtype=float)


def control_law(error, config: ControllerConfig) -> np.ndarray:
    """Proportional law: command = -gain * pinv(estimate) @ error.

    The estimate is square, so the Moore-Penrose pseudo-inverse reduces to
    the plain inverse; a conditioning check guards the solve.
    """
    est = config.interaction_estimate
    if np.linalg.cond(est) >= _COND_LIMIT:
        raise SingularInteractionError("interaction matrix singular")
    return -config.gain * np.linalg.solve(est, np.asarray(error, dtype=float))


def step_plant(state, command, plant: PlantModel, dt: float) -> np.ndarray:
    """Advance the spot position by one control period."""
    if not (dt > 0):
        raise ValueError("dt must be positive")
    velocity = plant.gain_matrix @ np.asarray(command, dtype=float)
    if plant.kind == SATURATED_DEADBAND:
        speed = math.hypot(*velocity)
        if speed < plant.deadband:
            velocity = np.zeros(2)
        elif speed > plant.rate_limit:
            velocity = velocity * (plant.rate_limit / speed)
    return np.asarray(state, dtype=float) + velocity * dt


def flatten_path(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concatenate polyline points into (positions, ablate flags, polyline index)."""
    if not path:
        raise ValueError("path must contain at least one polyline")
    pts, flags, owner = [], [], []
    for i, line in enumerate(path):
        if not isinstance(line, Polyline):
            raise ValueError("path entries must be Polyline instances")
        pts.append(line.points)
        flags.append(np.full(len(line), line.mode == ABLATE, dtype=bool))
        owner.append(np.full(len(line), i, dtype=int))
    return np.vstack(pts), np.concatenate(flags), np.concatenate(owner)


def follow_path(
    path,
    controller: ControllerConfig,
    plant: PlantModel,
    start,
    max_iter_per_waypoint: int = 2000,
) -> TrajectoryLog:
    """Track every waypoint of the path in order and log each iteration.

    Rows hold the post-step state: position, distance to the waypoint that
    was active during the step, and the actuator command that produced the
    step.  Waypoints already inside the convergence threshold are skipped
    without spending an iteration.  Raises StalledWaypointError when a
    waypoint stays out of reach for ``max_iter_per_waypoint`` iterations.
    """
    targets, ablate, _ = flatten_path(path)
    pos = np.asarray(start, dtype=float).copy()
    noise = None
    if controller.measurement_noise_px > 0:
        noise = np.random.default_rng(controller.noise_seed)

    it = []
    time_s = []
    positions = []
    waypoint_col = []
    errors = []
    commands = []
    laser_on = []
    k = 0
    for w, target in enumerate(targets):
        inner = 0
        while True:
            measured = pos
            if noise is not None:
                measured = pos + noise.normal(0.0, controller.measurement_noise_px, 2)
            err = visual_error(measured, target)
            if math.hypot(*err) < controller.convergence_threshold:
                break
            if inner >= max_iter_per_waypoint:
                raise StalledWaypointError(
                    f"stalled waypoint {w}: error {math.hypot(*err):.3g} px after "
                    f"{inner} iterations (deadband at or above gain*threshold "
                    f"prevents convergence)"
                )
            cmd = control_law(err, controller)
            pos = step_plant(pos, cmd, plant, controller.dt)
            k += 1
            inner += 1
            it.append(k - 1)
            time_s.append(k * controller.dt)
            positions.append(pos.copy())
            waypoint_col.append(w)
            errors.append(float(np.hypot(*(pos - target))))
            commands.append(cmd)
            laser_on.append(bool(ablate[w]))
    return TrajectoryLog(
        iterations=np.asarray(it, dtype=int),
        time_s=np.asarray(time_s, dtype=float),
        positions=np.asarray(positions, dtype=float).reshape(-1, 2),
        waypoints=np.asarray(waypoint_col, dtype=int),
        errors=np.asarray(errors, dtype=float),
        commands=np.asarray(commands, dtype=float).reshape(-1, 2),
        laser_on=np.asarray(laser_on, dtype=bool),
    )


def ablation_samples(log: TrajectoryLog) -> np.ndarray:
    """Indices of log rows recorded while the laser was on."""
    idx = np.nonzero(log.laser_on)[0]
    if idx.size == 0:
        raise NoAblationError("no ablation phase in trajectory log")
    return idx
