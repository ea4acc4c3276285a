"""Matching of predicted tracks to ground-truth agents for forecaster
finetuning supervision.

Two assignment strategies (one-to-one, many-to-one) crossed with two
distance modes (current frame only, mean over the shared past) give the
four supervision variants. Matching is always class-consistent and
gated at a distance threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .assignment import solve_gated_assignment
from .core import FutureTrajectory, GtAgent, PastSample, PastTrajectory, TimeBase
from .tracking import Track


class Assignment(Enum):
    ONE_TO_ONE = "one-one"
    MANY_TO_ONE = "many-one"


class DistanceMode(Enum):
    AT_T0 = "t0"
    ALL_PAST = "all"


@dataclass(frozen=True)
class MatchConfig:
    assignment: Assignment = Assignment.MANY_TO_ONE
    distance_mode: DistanceMode = DistanceMode.ALL_PAST
    gate: float = 2.0

    def __post_init__(self) -> None:
        if self.gate <= 0:
            raise ValueError("gate must be positive")


@dataclass(frozen=True)
class TrainingPair:
    """One supervision sample: a predicted past and the future its
    matched ground-truth agent actually took."""

    predicted_past: PastTrajectory
    gt_future: FutureTrajectory
    gt_agent_id: int
    match_distance: float


def past_distance(
    pred: PastTrajectory, gt: GtAgent, mode: DistanceMode
) -> float | None:
    """Distance between a predicted past and a ground-truth agent.

    AT_T0 uses the current frame only; ALL_PAST averages over every
    past frame where both exist. Returns None when they never coexist.
    """
    if mode is DistanceMode.AT_T0:
        samples = [pred.samples[-1]]
    else:
        samples = list(pred.samples)
    dists = []
    for s in samples:
        gt_pos = gt.position_at(pred.anchor_frame + s.frame)
        if gt_pos is not None:
            dists.append(math.hypot(s.x - gt_pos[0], s.y - gt_pos[1]))
    if not dists:
        return None
    return sum(dists) / len(dists)


def match_one_to_one(
    preds: list[PastTrajectory], gts: list[GtAgent], config: MatchConfig
) -> list[tuple[int, int, float]]:
    """Minimum-total-distance matching; each side used at most once.

    Returns (pred index, gt index, distance) triples for the gated,
    class-consistent optimum.
    """
    if not preds or not gts:
        return []
    n, m = len(preds), len(gts)
    dist = np.full((n, m), np.inf)
    allowed = np.zeros((n, m), dtype=bool)
    for i, pred in enumerate(preds):
        for j, gt in enumerate(gts):
            if pred.agent_class is not gt.agent_class:
                continue
            d = past_distance(pred, gt, config.distance_mode)
            if d is not None and d <= config.gate:
                dist[i, j] = d
                allowed[i, j] = True
    dist[~allowed] = 0.0  # kept out of the assignment by the gate mask
    return [(i, j, float(dist[i, j])) for i, j in solve_gated_assignment(dist, allowed)]


def match_many_to_one(
    preds: list[PastTrajectory], gts: list[GtAgent], config: MatchConfig
) -> list[tuple[int, int, float]]:
    """Each prediction independently takes its nearest gated same-class
    ground truth; one ground truth may receive several predictions.

    Distance ties break toward the lowest ground-truth agent id.
    """
    pairs = []
    for i, pred in enumerate(preds):
        best: tuple[float, int, int] | None = None
        for j, gt in enumerate(gts):
            if pred.agent_class is not gt.agent_class:
                continue
            d = past_distance(pred, gt, config.distance_mode)
            if d is None or d > config.gate:
                continue
            key = (d, gt.agent_id, j)
            if best is None or key < best:
                best = key
        if best is not None:
            pairs.append((i, best[2], best[0]))
    return pairs


def match(
    preds: list[PastTrajectory], gts: list[GtAgent], config: MatchConfig
) -> list[tuple[int, int, float]]:
    if config.assignment is Assignment.ONE_TO_ONE:
        return match_one_to_one(preds, gts, config)
    return match_many_to_one(preds, gts, config)


def extract_past(
    track: Track, frame0: int, time_base: TimeBase
) -> PastTrajectory | None:
    """A track's history ending at ``frame0``, capped at the past window.

    None when the track has no point at ``frame0``.
    """
    if track.point_at(frame0) is None:
        return None
    first = max(track.first_frame, frame0 - time_base.past_steps)
    samples = []
    for frame in range(first, frame0 + 1):
        p = track.point_at(frame)
        samples.append(
            PastSample(
                frame=frame - frame0,
                x=p.box.cx,
                y=p.box.cy,
                yaw=p.box.yaw,
                observed=p.observed,
            )
        )
    return PastTrajectory(
        agent_id=track.track_id,
        agent_class=track.agent_class,
        samples=tuple(samples),
        anchor_frame=frame0,
    )


def gt_future(gt: GtAgent, frame0: int, time_base: TimeBase) -> FutureTrajectory | None:
    """The agent's next ``horizon_steps`` positions after ``frame0``, or
    None when its annotation ends before the full horizon."""
    if gt.last_frame < frame0 + time_base.horizon_steps:
        return None
    waypoints = []
    for step in range(1, time_base.horizon_steps + 1):
        pos = gt.position_at(frame0 + step)
        if pos is None:
            return None
        waypoints.append(pos)
    return FutureTrajectory(tuple(waypoints))


def build_training_pairs(
    scene_tracks: list[Track],
    gt_agents: list[GtAgent],
    config: MatchConfig,
    time_base: TimeBase,
    frame0: int | None = None,
) -> list[TrainingPair]:
    """Supervision pairs for one scene at an inference frame.

    ``frame0`` defaults to the latest frame any track reaches. Matches
    whose ground truth lacks a full future horizon are dropped.
    """
    if not scene_tracks:
        return []
    if frame0 is None:
        frame0 = max(t.last_frame for t in scene_tracks)
    pasts = [p for t in scene_tracks if (p := extract_past(t, frame0, time_base))]
    pairs = []
    for i, j, d in match(pasts, gt_agents, config):
        future = gt_future(gt_agents[j], frame0, time_base)
        if future is None:
            continue
        pairs.append(
            TrainingPair(
                predicted_past=pasts[i],
                gt_future=future,
                gt_agent_id=gt_agents[j].agent_id,
                match_distance=d,
            )
        )
    return pairs
