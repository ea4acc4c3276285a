"""Greedy confidence-ordered fusion of multi-model detections.

Per frame and per class, the highest-scored unprocessed detection is
taken as reference, every unprocessed detection of the same class with
center closer than the fusion radius is gathered into its group, and
the group is collapsed into a single score-weighted box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import AgentClass, Box3D, Detection, center_distance_2d


@dataclass(frozen=True)
class EnsembleConfig:
    """Fusion radius, optionally overridden per class."""

    radius_r: float = 1.0
    class_radii: dict[AgentClass, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.radius_r <= 0 or any(r <= 0 for r in self.class_radii.values()):
            raise ValueError("fusion radii must be positive")

    def radius_for(self, agent_class: AgentClass) -> float:
        return self.class_radii.get(agent_class, self.radius_r)


def fuse_group(group: list[Detection]) -> Detection:
    """Collapse same-class, same-frame detections into one.

    Center and dimensions are score-weighted means, yaw is the
    score-weighted circular mean, and the fused score is the group
    maximum. The source-model tag is cleared.
    """
    if not group:
        raise ValueError("cannot fuse an empty group")
    first = group[0]
    if any(d.agent_class is not first.agent_class for d in group):
        raise ValueError("fuse_group requires a single agent class")
    if any(d.frame != first.frame for d in group):
        raise ValueError("fuse_group requires a single frame")

    weights = [d.score for d in group]
    total = sum(weights)
    if total <= 0.0:
        # All-zero scores: fall back to the unweighted mean.
        weights = [1.0] * len(group)
        total = float(len(group))

    def wmean(values: list[float]) -> float:
        return sum(w * v for w, v in zip(weights, values)) / total

    sin_sum = sum(w * math.sin(d.box.yaw) for w, d in zip(weights, group))
    cos_sum = sum(w * math.cos(d.box.yaw) for w, d in zip(weights, group))
    fused_box = Box3D(
        cx=wmean([d.box.cx for d in group]),
        cy=wmean([d.box.cy for d in group]),
        cz=wmean([d.box.cz for d in group]),
        length=wmean([d.box.length for d in group]),
        width=wmean([d.box.width for d in group]),
        height=wmean([d.box.height for d in group]),
        yaw=math.atan2(sin_sum, cos_sum),
    )
    return Detection(
        box=fused_box,
        agent_class=first.agent_class,
        score=max(d.score for d in group),
        frame=first.frame,
        source_model=None,
    )


def _order_key(d: Detection) -> tuple:
    sm = str(d.source_model) if d.source_model is not None else ""
    return (-d.score, d.box.cx, d.box.cy, sm)


def merge_frame(
    model_outputs: list[Detection], config: EnsembleConfig | None = None
) -> list[Detection]:
    """Fuse one frame's detections from any number of models.

    Classes are merged independently; no cross-class fusion happens.
    Output is ordered by descending fused score.
    """
    config = config or EnsembleConfig()
    if not model_outputs:
        return []
    frames = {d.frame for d in model_outputs}
    if len(frames) > 1:
        raise ValueError(f"merge_frame got detections from frames {sorted(frames)}")

    fused: list[Detection] = []
    classes = sorted({d.agent_class for d in model_outputs}, key=lambda c: c.value)
    for agent_class in classes:
        radius = config.radius_for(agent_class)
        pool = sorted(
            (d for d in model_outputs if d.agent_class is agent_class),
            key=_order_key,
        )
        while pool:
            reference = pool[0]
            group = [
                d for d in pool if center_distance_2d(reference.box, d.box) < radius
            ]
            fused.append(fuse_group(group))
            remaining = set(map(id, group))
            pool = [d for d in pool if id(d) not in remaining]
    fused.sort(key=_order_key)
    return fused
