"""Shared domain types and planar geometry helpers.

Conventions used throughout the package:

* Positions and dimensions are in meters, yaw in radians, normalized to
  the half-open interval (-pi, pi].
* Frame indices are integers at a fixed sampling rate (``TimeBase.hz``).
  Index 0 is the current inference time; negative indices are past,
  positive indices are future.
* Forecasting and matching distances are 2D (x, y). z is carried for
  box geometry but never enters trajectory distances.

All types here are immutable value objects and safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

TWO_PI = 2.0 * math.pi


def yaw_normalize(angle: float) -> float:
    """Reduce an angle into (-pi, pi].

    Raises ValueError on non-finite input.
    """
    if not math.isfinite(angle):
        raise ValueError(f"yaw must be finite, got {angle!r}")
    r = angle % TWO_PI  # in [0, 2*pi)
    if r > math.pi:
        r -= TWO_PI
    return r


class AgentClass(Enum):
    """The 26 agent classes annotated in the target benchmark."""

    REGULAR_VEHICLE = "regular_vehicle"
    PEDESTRIAN = "pedestrian"
    BOLLARD = "bollard"
    CONSTRUCTION_CONE = "construction_cone"
    CONSTRUCTION_BARREL = "construction_barrel"
    STOP_SIGN = "stop_sign"
    BICYCLE = "bicycle"
    LARGE_VEHICLE = "large_vehicle"
    WHEELED_DEVICE = "wheeled_device"
    BUS = "bus"
    BOX_TRUCK = "box_truck"
    SIGN = "sign"
    TRUCK = "truck"
    MOTORCYCLE = "motorcycle"
    BICYCLIST = "bicyclist"
    VEHICULAR_TRAILER = "vehicular_trailer"
    TRUCK_CAB = "truck_cab"
    MOTORCYCLIST = "motorcyclist"
    DOG = "dog"
    SCHOOL_BUS = "school_bus"
    WHEELED_RIDER = "wheeled_rider"
    STROLLER = "stroller"
    ARTICULATED_BUS = "articulated_bus"
    MESSAGE_BOARD_TRAILER = "message_board_trailer"
    MOBILE_PEDESTRIAN_CROSSING_SIGN = "mobile_pedestrian_crossing_sign"
    WHEELCHAIR = "wheelchair"

    @property
    def is_always_static(self) -> bool:
        """True for street furniture that never moves."""
        return self in _ALWAYS_STATIC


_ALWAYS_STATIC = frozenset(
    {
        AgentClass.BOLLARD,
        AgentClass.CONSTRUCTION_CONE,
        AgentClass.CONSTRUCTION_BARREL,
        AgentClass.SIGN,
        AgentClass.MOBILE_PEDESTRIAN_CROSSING_SIGN,
        AgentClass.MESSAGE_BOARD_TRAILER,
    }
)


@dataclass(frozen=True)
class Box3D:
    """Oriented 3D bounding box: center, dimensions, heading.

    Dimensions must be strictly positive; yaw is normalized into
    (-pi, pi] on construction.
    """

    cx: float
    cy: float
    cz: float
    length: float
    width: float
    height: float
    yaw: float

    def __post_init__(self) -> None:
        for name in ("cx", "cy", "cz", "length", "width", "height", "yaw"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"Box3D.{name} must be finite, got {v!r}")
        if self.length <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"Box3D dimensions must be positive, got "
                f"({self.length}, {self.width}, {self.height})"
            )
        object.__setattr__(self, "yaw", yaw_normalize(self.yaw))

    @property
    def volume(self) -> float:
        return self.length * self.width * self.height


def center_distance_2d(a: Box3D, b: Box3D) -> float:
    """Planar Euclidean distance between two box centers."""
    return math.hypot(a.cx - b.cx, a.cy - b.cy)


@dataclass(frozen=True)
class Detection:
    """A scored, classed box at one frame, optionally tagged with the
    detector model that produced it."""

    box: Box3D
    agent_class: AgentClass
    score: float
    frame: int
    source_model: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class TimeBase:
    """Sampling-rate and window conventions shared by the pipeline."""

    hz: float = 10.0
    past_window_s: float = 2.0
    horizon_steps: int = 30

    def __post_init__(self) -> None:
        if self.hz <= 0:
            raise ValueError("hz must be positive")
        steps = self.past_window_s * self.hz
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("past_window_s * hz must be an integer number of steps")
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")

    @property
    def past_steps(self) -> int:
        return int(round(self.past_window_s * self.hz))


@dataclass(frozen=True)
class PastSample:
    """One pose sample of a past trajectory; ``observed`` is False for
    points filled in by motion-model propagation or interpolation."""

    frame: int
    x: float
    y: float
    yaw: float
    observed: bool = True


@dataclass(frozen=True)
class PastTrajectory:
    """History of one agent ending at the current frame.

    Sample frames are relative (last sample has frame 0);
    ``anchor_frame`` records the absolute scene frame of that sample.
    """

    agent_id: int
    agent_class: AgentClass
    samples: tuple[PastSample, ...]
    anchor_frame: int = 0

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError("PastTrajectory needs at least one sample")
        frames = [s.frame for s in self.samples]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("sample frames must be strictly increasing")
        if frames[-1] != 0:
            raise ValueError("last sample must be at the current frame (0)")

    @property
    def current(self) -> PastSample:
        return self.samples[-1]


@dataclass(frozen=True)
class FutureTrajectory:
    """Fixed-length sequence of future (x, y) waypoints, one per step."""

    waypoints: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("FutureTrajectory must not be empty")
        object.__setattr__(
            self, "waypoints", tuple((float(x), float(y)) for x, y in self.waypoints)
        )

    def __len__(self) -> int:
        return len(self.waypoints)

    @property
    def endpoint(self) -> tuple[float, float]:
        return self.waypoints[-1]


@dataclass(frozen=True)
class ForecastMode:
    trajectory: FutureTrajectory
    score: float

    def __post_init__(self) -> None:
        if self.score < 0:
            raise ValueError("mode score must be >= 0")


@dataclass(frozen=True)
class ForecastSet:
    """K future hypotheses with per-mode scores for one agent.

    Scores need not sum to 1; post-processing assigns an absolute
    score of 1 to the injected static mode.
    """

    modes: tuple[ForecastMode, ...]

    def __post_init__(self) -> None:
        if not self.modes:
            raise ValueError("ForecastSet needs at least one mode")

    @property
    def k(self) -> int:
        return len(self.modes)


@dataclass(frozen=True)
class GtAgent:
    """Ground-truth agent: one box per frame over a contiguous lifespan."""

    agent_id: int
    agent_class: AgentClass
    boxes: tuple[tuple[int, Box3D], ...] = field(repr=False)

    def __post_init__(self) -> None:
        if not self.boxes:
            raise ValueError("GtAgent needs at least one sample")
        frames = [f for f, _ in self.boxes]
        if any(b != a + 1 for a, b in zip(frames, frames[1:])):
            raise ValueError("GtAgent frames must be contiguous")

    @property
    def first_frame(self) -> int:
        return self.boxes[0][0]

    @property
    def last_frame(self) -> int:
        return self.boxes[-1][0]

    def box_at(self, frame: int) -> Box3D | None:
        if self.first_frame <= frame <= self.last_frame:
            return self.boxes[frame - self.first_frame][1]
        return None

    def position_at(self, frame: int) -> tuple[float, float] | None:
        box = self.box_at(frame)
        return None if box is None else (box.cx, box.cy)
