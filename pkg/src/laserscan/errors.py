"""Exception types raised by the scanning pipeline.

Everything inherits from ScanError so the command-line driver can catch
pipeline failures in one place and turn them into a one-line diagnostic.
Precondition violations on plain bad arguments raise ValueError instead.
"""


class ScanError(Exception):
    """Base class for all pipeline-level failures."""


class PlacementError(ScanError):
    """Synthetic scene could not fit the requested content."""


class LaserSpotError(ScanError):
    """The laser spot is missing or ambiguous in the scene."""


class DetectionError(ScanError):
    """Region detection produced nothing usable for planning."""


class DegenerateRegionError(ScanError):
    """A contour is too thin or malformed for frame extraction."""


class TourSizeError(ScanError):
    """Instance exceeds the size cap of the requested tour solver."""


class SingularInteractionError(ScanError):
    """The interaction-matrix estimate is not usable for control."""


class StalledWaypointError(ScanError):
    """The closed loop failed to reach a waypoint within its iteration cap."""


class NoAblationError(ScanError):
    """A trajectory log contains no ablation-phase samples."""


class ConfigError(ScanError):
    """A scenario configuration file or value is invalid."""
