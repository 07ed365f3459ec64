"""Task-frame geometry and the integer-microsecond time base.

Frame convention: x lateral (right-positive), y vertical (up-positive),
z depth (away from the user, positive). All distances are millimeters,
all engine timestamps are integer microseconds since session start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# 120 Hz pose stream and 100 Hz command stream, as exact integer periods.
POSE_PERIOD_US = 8333
FRAME_PERIOD_US = 10000


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite Vec3 component: {(self.x, self.y, self.z)}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True, slots=True)
class AxisError:
    """Per-axis correction vector (target minus tool), in millimeters.

    Positive dx means the target is to the operator's right, i.e. the
    required correction is a rightward move (pull convention).
    """

    dx: float
    dy: float
    dz: float

    def norm(self) -> float:
        return math.sqrt(self.dx * self.dx + self.dy * self.dy + self.dz * self.dz)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)


@dataclass(frozen=True, slots=True)
class TargetSpec:
    """A spherical target: rendered radius plus the success tolerance radius."""

    center: Vec3
    visual_radius: float = 5.0
    tolerance_radius: float = 2.0

    def __post_init__(self):
        if self.visual_radius <= 0:
            raise ValueError("visual_radius must be positive")
        if self.tolerance_radius <= 0:
            raise ValueError("tolerance_radius must be positive")


class Clock:
    """Monotonically non-decreasing session clock, 1 us granularity."""

    __slots__ = ("_now",)

    def __init__(self, start_us: int = 0):
        self._now = int(start_us)

    @property
    def now(self) -> int:
        return self._now

    def advance_to(self, t_us: int) -> int:
        t_us = int(t_us)
        if t_us < self._now:
            raise ValueError(f"clock regression: {t_us} < {self._now}")
        self._now = t_us
        return self._now

    def advance_by(self, dt_us: int) -> int:
        if dt_us < 0:
            raise ValueError("negative clock step")
        self._now += int(dt_us)
        return self._now


def axis_error(tool: Vec3, target: Vec3) -> AxisError:
    """Correction vector from tool tip to target, per axis."""
    return AxisError(target.x - tool.x, target.y - tool.y, target.z - tool.z)


def euclidean_error(tool: Vec3, target: Vec3) -> float:
    """Straight-line distance between tool tip and target, mm."""
    return axis_error(tool, target).norm()


def periodic_schedule(period_us: int, horizon_us: int) -> list[int]:
    """Firing times k*period for k*period <= horizon, ascending.

    Raises ValueError for a non-positive period.
    """
    if period_us <= 0:
        raise ValueError("period_us must be positive")
    if horizon_us < 0:
        return []
    return list(range(0, int(horizon_us) + 1, int(period_us)))
