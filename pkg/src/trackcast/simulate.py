"""Seeded synthetic world generator and detection corruptor.

Ground-truth agents move on static, constant-velocity, or constant-speed
circular-arc paths; corruption then produces exactly the error classes an
imperfect perception stack exhibits: dropped boxes, localization noise,
and clutter with its own score model. Identity switches are never
injected directly; they emerge downstream when gaps and clutter confuse
the tracker's association.

Every stochastic draw is addressed by (seed, frame, agent, purpose)
through independent generators, so any frame of any stream can be
reproduced in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import AgentClass, Box3D, Detection, GtAgent, TimeBase, yaw_normalize

# Slot constants keeping the RNG address spaces of scene generation,
# per-agent corruption, and clutter disjoint.
_GEN_SLOT = 10**6
_CLUTTER_SLOT = 10**9

# Nominal (length, width, height) per class, metres.
_CLASS_DIMS: dict[AgentClass, tuple[float, float, float]] = {
    AgentClass.REGULAR_VEHICLE: (4.6, 1.9, 1.6),
    AgentClass.PEDESTRIAN: (0.7, 0.7, 1.8),
    AgentClass.BICYCLIST: (1.8, 0.7, 1.8),
    AgentClass.MOTORCYCLIST: (2.0, 0.8, 1.8),
    AgentClass.WHEELED_RIDER: (1.6, 0.7, 1.8),
    AgentClass.BOLLARD: (0.3, 0.3, 1.0),
    AgentClass.CONSTRUCTION_CONE: (0.4, 0.4, 0.8),
    AgentClass.SIGN: (0.6, 0.2, 1.2),
    AgentClass.CONSTRUCTION_BARREL: (0.6, 0.6, 1.0),
    AgentClass.STOP_SIGN: (0.8, 0.2, 2.2),
    AgentClass.MOBILE_PEDESTRIAN_CROSSING_SIGN: (0.8, 0.3, 1.5),
    AgentClass.LARGE_VEHICLE: (8.0, 2.6, 3.0),
    AgentClass.BUS: (11.0, 2.9, 3.3),
    AgentClass.BOX_TRUCK: (7.5, 2.5, 3.2),
    AgentClass.TRUCK: (6.5, 2.4, 2.8),
    AgentClass.VEHICULAR_TRAILER: (5.5, 2.3, 2.5),
    AgentClass.TRUCK_CAB: (6.0, 2.5, 3.2),
    AgentClass.SCHOOL_BUS: (10.0, 2.8, 3.2),
    AgentClass.ARTICULATED_BUS: (16.0, 2.9, 3.3),
    AgentClass.MESSAGE_BOARD_TRAILER: (3.0, 1.8, 2.5),
    AgentClass.BICYCLE: (1.8, 0.6, 1.1),
    AgentClass.MOTORCYCLE: (2.0, 0.8, 1.2),
    AgentClass.WHEELED_DEVICE: (1.2, 0.6, 1.1),
    AgentClass.WHEELCHAIR: (1.0, 0.7, 1.3),
    AgentClass.STROLLER: (0.9, 0.6, 1.1),
    AgentClass.DOG: (0.9, 0.4, 0.6),
}

# Plausible speed interval (m/s) per movable class. The configured
# speed range is intersected with this, so a pedestrian never sprints
# at highway speed; at 10 Hz these keep consecutive-frame box overlap
# comfortably above the tracker's IoU gate.
_CLASS_SPEEDS: dict[AgentClass, tuple[float, float]] = {
    AgentClass.REGULAR_VEHICLE: (2.0, 12.0),
    AgentClass.PEDESTRIAN: (0.5, 2.0),
    AgentClass.BICYCLIST: (1.0, 5.0),
    AgentClass.MOTORCYCLIST: (1.5, 6.0),
    AgentClass.WHEELED_RIDER: (1.0, 4.0),
    AgentClass.STOP_SIGN: (0.2, 1.0),
    AgentClass.LARGE_VEHICLE: (2.0, 10.0),
    AgentClass.BUS: (2.0, 10.0),
    AgentClass.BOX_TRUCK: (2.0, 10.0),
    AgentClass.TRUCK: (2.0, 10.0),
    AgentClass.VEHICULAR_TRAILER: (2.0, 8.0),
    AgentClass.TRUCK_CAB: (2.0, 10.0),
    AgentClass.SCHOOL_BUS: (2.0, 10.0),
    AgentClass.ARTICULATED_BUS: (2.0, 10.0),
    AgentClass.BICYCLE: (1.0, 5.0),
    AgentClass.MOTORCYCLE: (1.5, 6.0),
    AgentClass.WHEELED_DEVICE: (0.5, 3.0),
    AgentClass.WHEELCHAIR: (0.5, 2.0),
    AgentClass.STROLLER: (0.5, 2.0),
    AgentClass.DOG: (0.5, 3.0),
}

_DEFAULT_MIX: dict[AgentClass, float] = {
    AgentClass.REGULAR_VEHICLE: 0.45,
    AgentClass.PEDESTRIAN: 0.25,
    AgentClass.BICYCLIST: 0.08,
    AgentClass.BUS: 0.07,
    AgentClass.BOLLARD: 0.08,
    AgentClass.CONSTRUCTION_CONE: 0.07,
}


class _Kind(Enum):
    STATIC = 0
    LINEAR = 1
    TURNING = 2


@dataclass(frozen=True)
class SimConfig:
    n_agents: int = 12
    fraction_static: float = 0.3
    fraction_linear: float = 0.5
    fraction_turning: float = 0.2
    speed_range: tuple[float, float] = (0.5, 8.0)  # m/s
    turn_radius_range: tuple[float, float] = (8.0, 25.0)  # m
    scene_len: int = 51  # frames
    extent_m: float = 40.0  # agents spawn within +-extent of the ego
    class_mix: dict[AgentClass, float] = field(
        default_factory=lambda: dict(_DEFAULT_MIX)
    )
    time_base: TimeBase = field(default_factory=TimeBase)

    def __post_init__(self) -> None:
        if self.n_agents <= 0:
            raise ValueError("n_agents must be positive")
        fracs = (self.fraction_static, self.fraction_linear, self.fraction_turning)
        if any(f < 0 or f > 1 for f in fracs):
            raise ValueError("motion fractions must lie in [0, 1]")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError("motion fractions must sum to 1")
        if self.speed_range[0] <= 0 or self.speed_range[1] < self.speed_range[0]:
            raise ValueError("invalid speed range")
        if (
            self.turn_radius_range[0] <= 0
            or self.turn_radius_range[1] < self.turn_radius_range[0]
        ):
            raise ValueError("invalid turn radius range")
        min_len = self.time_base.past_steps + self.time_base.horizon_steps + 1
        if self.scene_len < min_len:
            raise ValueError(
                f"scene_len {self.scene_len} shorter than past window plus "
                f"horizon ({min_len} frames)"
            )
        if self.extent_m <= 0:
            raise ValueError("extent must be positive")
        if not self.class_mix or any(w < 0 for w in self.class_mix.values()):
            raise ValueError("class mix must be non-empty with non-negative weights")
        if sum(self.class_mix.values()) <= 0:
            raise ValueError("class mix weights must not all be zero")


@dataclass(frozen=True)
class NoiseConfig:
    p_fn: float = 0.1
    fp_rate: float = 0.5  # expected clutter detections per frame
    sigma_xy: float = 0.2
    sigma_z: float = 0.05
    sigma_yaw: float = 0.05
    sigma_dims: float = 0.05
    s_lo_tp: float = 0.5
    s_hi_fp: float = 0.6

    def __post_init__(self) -> None:
        for p in (self.p_fn, self.s_lo_tp, self.s_hi_fp):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities and score bounds must lie in [0, 1]")
        if self.fp_rate < 0:
            raise ValueError("fp_rate must be non-negative")
        if min(self.sigma_xy, self.sigma_z, self.sigma_yaw, self.sigma_dims) < 0:
            raise ValueError("sigmas must be non-negative")


@dataclass(frozen=True)
class Scene:
    scene_id: str
    hz: float
    n_frames: int
    extent_m: float
    agents: tuple[GtAgent, ...]


def _rng(seed: int, frame: int, agent: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng((seed, frame, agent, purpose))


def _motion_counts(config: SimConfig) -> dict[_Kind, int]:
    """Largest-remainder split of n_agents over the motion fractions."""
    fracs = [
        (config.fraction_static, _Kind.STATIC),
        (config.fraction_linear, _Kind.LINEAR),
        (config.fraction_turning, _Kind.TURNING),
    ]
    raw = [(f * config.n_agents, kind) for f, kind in fracs]
    counts = {kind: int(v) for v, kind in raw}
    short = config.n_agents - sum(counts.values())
    by_remainder = sorted(raw, key=lambda t: -(t[0] - int(t[0])))
    for i in range(short):
        counts[by_remainder[i % 3][1]] += 1
    return counts


def _speed_interval(
    agent_class: AgentClass, config_range: tuple[float, float]
) -> tuple[float, float]:
    """Configured speed range clipped to the class-plausible one; falls
    back to the class interval when they are disjoint."""
    cls_lo, cls_hi = _CLASS_SPEEDS.get(agent_class, config_range)
    lo, hi = max(cls_lo, config_range[0]), min(cls_hi, config_range[1])
    if lo > hi:
        return (cls_lo, cls_hi)
    return (lo, hi)


def _pick_class(
    rng: np.random.Generator, mix: dict[AgentClass, float], movable_only: bool
) -> AgentClass:
    items = sorted(mix.items(), key=lambda kv: kv[0].value)
    if movable_only:
        items = [(c, w) for c, w in items if not c.is_always_static]
    items = [(c, w) for c, w in items if w > 0]
    if not items:
        raise ValueError("class mix has no movable class for a moving agent")
    weights = np.array([w for _, w in items], dtype=float)
    idx = rng.choice(len(items), p=weights / weights.sum())
    return items[int(idx)][0]


def _agent_positions(
    kind: _Kind,
    x0: float,
    y0: float,
    yaw0: float,
    speed: float,
    radius: float,
    turn_dir: float,
    hz: float,
    n_frames: int,
) -> list[tuple[float, float, float]]:
    """(x, y, yaw) per frame for one agent."""
    if kind is _Kind.STATIC:
        return [(x0, y0, yaw0)] * n_frames
    step = speed / hz  # metres per frame
    if kind is _Kind.LINEAR:
        vx = step * math.cos(yaw0)
        vy = step * math.sin(yaw0)
        return [
            (x0 + vx * t, y0 + vy * t, yaw0) for t in range(n_frames)
        ]
    # Constant-speed arc around a center perpendicular to the heading.
    cx = x0 - radius * math.sin(yaw0) * turn_dir
    cy = y0 + radius * math.cos(yaw0) * turn_dir
    theta0 = math.atan2(y0 - cy, x0 - cx)
    dtheta = turn_dir * step / radius  # radians per frame
    out = []
    for t in range(n_frames):
        theta = theta0 + dtheta * t
        out.append(
            (
                cx + radius * math.cos(theta),
                cy + radius * math.sin(theta),
                yaw_normalize(yaw0 + dtheta * t),
            )
        )
    return out


def gen_scene(config: SimConfig, seed: int) -> Scene:
    """Generate ground truth; deterministic in (config, seed)."""
    counts = _motion_counts(config)
    kinds = (
        [_Kind.STATIC] * counts[_Kind.STATIC]
        + [_Kind.LINEAR] * counts[_Kind.LINEAR]
        + [_Kind.TURNING] * counts[_Kind.TURNING]
    )
    hz = config.time_base.hz
    agents = []
    for i, kind in enumerate(kinds):
        rng = _rng(seed, _GEN_SLOT, i, 0)
        agent_class = _pick_class(rng, config.class_mix, kind is not _Kind.STATIC)
        x0, y0 = rng.uniform(-config.extent_m, config.extent_m, size=2)
        yaw0 = rng.uniform(-math.pi, math.pi)
        nominal = _CLASS_DIMS[agent_class]
        dims = tuple(
            max(0.1, d * rng.uniform(0.9, 1.1)) for d in nominal
        )
        speed = rng.uniform(*_speed_interval(agent_class, config.speed_range))
        radius = rng.uniform(*config.turn_radius_range)
        turn_dir = 1.0 if rng.uniform() < 0.5 else -1.0
        poses = _agent_positions(
            kind, float(x0), float(y0), yaw0, speed, radius, turn_dir, hz,
            config.scene_len,
        )
        boxes = tuple(
            (t, Box3D(x, y, dims[2] / 2.0, dims[0], dims[1], dims[2], yaw))
            for t, (x, y, yaw) in enumerate(poses)
        )
        agents.append(GtAgent(agent_id=i, agent_class=agent_class, boxes=boxes))
    return Scene(
        scene_id=f"scene-{seed}",
        hz=hz,
        n_frames=config.scene_len,
        extent_m=config.extent_m,
        agents=tuple(agents),
    )


def _jitter_box(box: Box3D, noise: NoiseConfig, seed: int, frame: int, agent: int) -> Box3D:
    dx, dy = _rng(seed, frame, agent, 1).normal(0.0, 1.0, size=2) * noise.sigma_xy
    dz = _rng(seed, frame, agent, 2).normal(0.0, noise.sigma_z) if noise.sigma_z else 0.0
    dyaw = (
        _rng(seed, frame, agent, 3).normal(0.0, noise.sigma_yaw)
        if noise.sigma_yaw
        else 0.0
    )
    if noise.sigma_dims:
        dl, dw, dh = _rng(seed, frame, agent, 4).normal(
            0.0, noise.sigma_dims, size=3
        )
    else:
        dl = dw = dh = 0.0
    return Box3D(
        cx=box.cx + float(dx),
        cy=box.cy + float(dy),
        cz=box.cz + float(dz),
        yaw=yaw_normalize(box.yaw + float(dyaw)),
        length=max(0.1, box.length + float(dl)),
        width=max(0.1, box.width + float(dw)),
        height=max(0.1, box.height + float(dh)),
    )


def corrupt(
    scene: Scene,
    noise: NoiseConfig,
    seed: int,
    source_model: str | None = None,
) -> list[list[Detection]]:
    """Per-frame detections with drops, jitter, and clutter.

    Deterministic in (scene, noise, seed); distinct ensemble members
    should pass distinct seeds.
    """
    classes = sorted(_CLASS_DIMS, key=lambda c: c.value)
    frames: list[list[Detection]] = []
    for frame in range(scene.n_frames):
        dets: list[Detection] = []
        for agent in scene.agents:
            box = agent.box_at(frame)
            if box is None:
                continue
            if noise.p_fn > 0.0 and (
                _rng(seed, frame, agent.agent_id, 0).uniform() < noise.p_fn
            ):
                continue
            jittered = _jitter_box(box, noise, seed, frame, agent.agent_id)
            score = float(
                _rng(seed, frame, agent.agent_id, 5).uniform(noise.s_lo_tp, 1.0)
            )
            dets.append(
                Detection(
                    frame=frame,
                    agent_class=agent.agent_class,
                    box=jittered,
                    score=score,
                    source_model=source_model,
                )
            )
        n_clutter = (
            int(_rng(seed, frame, _CLUTTER_SLOT, 0).poisson(noise.fp_rate))
            if noise.fp_rate > 0.0
            else 0
        )
        for k in range(n_clutter):
            slot = _CLUTTER_SLOT + 1 + k
            pose_rng = _rng(seed, frame, slot, 0)
            x, y = pose_rng.uniform(-scene.extent_m, scene.extent_m, size=2)
            yaw = float(pose_rng.uniform(-math.pi, math.pi))
            cls_idx = int(_rng(seed, frame, slot, 1).integers(0, len(classes)))
            agent_class = classes[cls_idx]
            dims = _CLASS_DIMS[agent_class]
            score = float(_rng(seed, frame, slot, 2).uniform(0.0, noise.s_hi_fp))
            dets.append(
                Detection(
                    frame=frame,
                    agent_class=agent_class,
                    box=Box3D(
                        float(x), float(y), dims[2] / 2.0, dims[0], dims[1], dims[2],
                        yaw,
                    ),
                    score=score,
                    source_model=source_model,
                )
            )
        frames.append(dets)
    return frames
