"""Pluggable trajectory forecasting and static-mode post-processing.

The shipped baseline extrapolates a least-squares constant velocity and
fans the remaining modes across heading offsets. Post-processing
injects an absolute-scored stationary mode, and collapses forecasts for
classes that never move to that single stationary mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    AgentClass,
    ForecastMode,
    ForecastSet,
    FutureTrajectory,
    GtAgent,
    PastTrajectory,
    TimeBase,
)
from .matching import gt_future


@dataclass(frozen=True)
class ForecastConfig:
    """Mode count, horizon, and the heading fan of non-primary modes."""

    k_modes: int = 5
    horizon_steps: int = 30
    fan_angles: tuple[float, ...] = (0.2, -0.2, 0.4, -0.4)

    def __post_init__(self) -> None:
        if self.k_modes < 2:
            raise ValueError("k_modes must be >= 2")
        if len(self.fan_angles) != self.k_modes - 1:
            raise ValueError("fan_angles must have k_modes - 1 entries")
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")


def mode_scores(k: int) -> tuple[float, ...]:
    """Fixed score sequence: 0.5 for the primary mode, the rest sharing
    the other half, so the least probable mode is well defined."""
    return (0.5,) + (0.5 / (k - 1),) * (k - 1)


def _fit_velocity(past: PastTrajectory) -> tuple[float, float]:
    """Least-squares per-frame velocity over the available samples."""
    samples = past.samples
    if len(samples) < 2:
        return 0.0, 0.0
    n = len(samples)
    fbar = sum(s.frame for s in samples) / n
    xbar = sum(s.x for s in samples) / n
    ybar = sum(s.y for s in samples) / n
    denom = sum((s.frame - fbar) ** 2 for s in samples)
    vx = sum((s.frame - fbar) * (s.x - xbar) for s in samples) / denom
    vy = sum((s.frame - fbar) * (s.y - ybar) for s in samples) / denom
    return vx, vy


def _extrapolate(
    x0: float, y0: float, vx: float, vy: float, steps: int
) -> FutureTrajectory:
    return FutureTrajectory(
        tuple((x0 + vx * (i + 1), y0 + vy * (i + 1)) for i in range(steps))
    )


def forecast_cv(past: PastTrajectory, config: ForecastConfig) -> ForecastSet:
    """Constant-velocity multi-modal baseline.

    Mode 0 extrapolates the fitted velocity; mode i rotates that
    velocity by ``fan_angles[i - 1]``.
    """
    vx, vy = _fit_velocity(past)
    x0, y0 = past.current.x, past.current.y
    scores = mode_scores(config.k_modes)
    modes = [ForecastMode(_extrapolate(x0, y0, vx, vy, config.horizon_steps), scores[0])]
    for angle, score in zip(config.fan_angles, scores[1:]):
        c, s = math.cos(angle), math.sin(angle)
        rvx, rvy = vx * c - vy * s, vx * s + vy * c
        modes.append(ForecastMode(_extrapolate(x0, y0, rvx, rvy, config.horizon_steps), score))
    return ForecastSet(tuple(modes))


def _static_future(past: PastTrajectory, steps: int) -> FutureTrajectory:
    x0, y0 = past.current.x, past.current.y
    return FutureTrajectory(tuple((x0, y0) for _ in range(steps)))


def _is_static(mode: ForecastMode, past: PastTrajectory) -> bool:
    x0, y0 = past.current.x, past.current.y
    return all(w == (x0, y0) for w in mode.trajectory.waypoints)


def post_process(
    forecasts: ForecastSet, past: PastTrajectory, agent_class: AgentClass
) -> ForecastSet:
    """Guarantee a stationary hypothesis.

    Always-static classes collapse to a single stationary mode scored 1.
    Otherwise the least probable mode (lowest score, later mode on ties)
    is replaced by a stationary future scored 1; leaves forecast sets
    that already carry a score-1 stationary mode untouched, which makes
    the operation idempotent.
    """
    horizon = len(forecasts.modes[0].trajectory)
    static = _static_future(past, horizon)
    if agent_class.is_always_static:
        return ForecastSet((ForecastMode(static, 1.0),))
    if any(_is_static(m, past) and m.score == 1.0 for m in forecasts.modes):
        return forecasts
    worst = min(range(forecasts.k), key=lambda i: (forecasts.modes[i].score, -i))
    modes = list(forecasts.modes)
    modes[worst] = ForecastMode(static, 1.0)
    return ForecastSet(tuple(modes))


class Forecaster:
    """Interface: one past trajectory in, a multi-modal future out."""

    def forecast(self, past: PastTrajectory) -> ForecastSet:
        raise NotImplementedError


class ConstantVelocityForecaster(Forecaster):
    def __init__(self, config: ForecastConfig | None = None) -> None:
        self.config = config or ForecastConfig()

    def forecast(self, past: PastTrajectory) -> ForecastSet:
        return forecast_cv(past, self.config)


class OracleForecaster(Forecaster):
    """Returns the true future of the nearest ground-truth agent as a
    single mode scored 1. Test-only: used to calibrate metric ceilings,
    never part of the production pipeline."""

    def __init__(self, gt_agents: list[GtAgent], time_base: TimeBase) -> None:
        self.gt_agents = gt_agents
        self.time_base = time_base

    def forecast(self, past: PastTrajectory) -> ForecastSet:
        x0, y0 = past.current.x, past.current.y
        best: tuple[float, int, FutureTrajectory] | None = None
        for idx, gt in enumerate(self.gt_agents):
            pos = gt.position_at(past.anchor_frame)
            if pos is None:
                continue
            future = gt_future(gt, past.anchor_frame, self.time_base)
            if future is None:
                continue
            d = math.hypot(x0 - pos[0], y0 - pos[1])
            if best is None or (d, idx) < (best[0], best[1]):
                best = (d, idx, future)
        if best is None:
            return ForecastSet(
                (ForecastMode(_static_future(past, self.time_base.horizon_steps), 1.0),)
            )
        return ForecastSet((ForecastMode(best[2], 1.0),))
