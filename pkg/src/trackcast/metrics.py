"""End-to-end forecasting and tracking metrics.

Forecasting: average precision per (class, trajectory type, threshold)
cell, with a prediction counting as true positive only when it matches
a ground-truth agent both at the current frame and at the forecast
endpoint. Displacement errors (ADE/FDE) are computed on matched agents
with the minimum-error mode.

Tracking: HOTA with a gated center-distance similarity, CLEAR-style
MOTA with identity-switch counting, and AMOTA averaging the
recall-normalized MOTA over a fixed recall sweep.

The ego vehicle sits at the origin; everything farther than the
evaluation range at a given frame is invisible to the metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .assignment import solve_gated_assignment
from .core import AgentClass, ForecastSet, FutureTrajectory, GtAgent
from .tracking import Track


@dataclass(frozen=True)
class MetricConfig:
    match_threshold_m: float = 2.0
    ap_recall_samples: int = 101
    hota_alphas: tuple[float, ...] = tuple(round(0.05 * i, 2) for i in range(1, 20))
    amota_recalls: tuple[float, ...] = tuple(
        float(r) for r in np.linspace(0.025, 1.0, 40)
    )
    eval_range_m: float = 50.0
    static_disp_m: float = 1.0
    linear_tol_m: float = 2.0
    ap_thresholds: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    # When False, only the top-scored mode's endpoint can satisfy the
    # forecast true-positive check instead of any of the K modes.
    endpoint_any_mode: bool = True

    def __post_init__(self) -> None:
        if min(
            self.match_threshold_m,
            self.eval_range_m,
            self.static_disp_m,
            self.linear_tol_m,
        ) <= 0:
            raise ValueError("metric thresholds must be positive")


class TrajectoryType(Enum):
    STATIC = "static"
    LINEAR = "linear"
    NON_LINEAR = "non_linear"


def classify_trajectory(
    gt_future: FutureTrajectory,
    current: tuple[float, float],
    past_velocity: tuple[float, float],
    config: MetricConfig,
) -> TrajectoryType:
    """Bucket a ground-truth future as static, linear, or non-linear.

    ``past_velocity`` is per step; the linear test compares the true
    endpoint against the constant-velocity extrapolation of it.
    """
    ex, ey = gt_future.endpoint
    if math.hypot(ex - current[0], ey - current[1]) < config.static_disp_m:
        return TrajectoryType.STATIC
    steps = len(gt_future)
    lx = current[0] + past_velocity[0] * steps
    ly = current[1] + past_velocity[1] * steps
    if math.hypot(ex - lx, ey - ly) <= config.linear_tol_m:
        return TrajectoryType.LINEAR
    return TrajectoryType.NON_LINEAR


# ---------------------------------------------------------------------------
# Forecasting metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForecastPrediction:
    """One predicted agent at the inference frame, ranked by its
    detection confidence."""

    agent_id: int
    agent_class: AgentClass
    score: float
    current: tuple[float, float]
    forecast: ForecastSet


@dataclass(frozen=True)
class ForecastTarget:
    """One ground-truth agent at the inference frame."""

    agent_id: int
    agent_class: AgentClass
    current: tuple[float, float]
    future: FutureTrajectory
    past_velocity: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class ForecastScene:
    """Predictions and targets of one scene at its inference frame."""

    predictions: tuple[ForecastPrediction, ...]
    targets: tuple[ForecastTarget, ...]


def displacement_errors(
    pred: ForecastSet, gt_future: FutureTrajectory
) -> tuple[float, float]:
    """(ADE, FDE) of the minimum-average-error mode.

    One mode is selected by smallest ADE; the FDE is that same mode's
    final-step distance, so it always equals the last term of the ADE
    mean.
    """
    best: tuple[float, float] | None = None
    for mode in pred.modes:
        if len(mode.trajectory) != len(gt_future):
            raise ValueError("forecast and ground-truth horizons differ")
        dists = [
            math.hypot(px - gx, py - gy)
            for (px, py), (gx, gy) in zip(mode.trajectory.waypoints, gt_future.waypoints)
        ]
        ade_m = sum(dists) / len(dists)
        if best is None or ade_m < best[0]:
            best = (ade_m, dists[-1])
    assert best is not None
    return best


def ade(pred: ForecastSet, gt_future: FutureTrajectory) -> float:
    return displacement_errors(pred, gt_future)[0]


def fde(pred: ForecastSet, gt_future: FutureTrajectory) -> float:
    return displacement_errors(pred, gt_future)[1]


def _endpoint_candidates(p: ForecastPrediction, any_mode: bool) -> list[tuple[float, float]]:
    if any_mode:
        return [m.trajectory.endpoint for m in p.forecast.modes]
    top = max(range(p.forecast.k), key=lambda i: (p.forecast.modes[i].score, -i))
    return [p.forecast.modes[top].trajectory.endpoint]


def label_predictions(
    predictions: list[ForecastPrediction],
    gts: list[ForecastTarget],
    threshold: float,
    config: MetricConfig | None = None,
) -> list[tuple[float, bool]]:
    """Greedy true/false-positive labels in descending score order.

    A prediction is a true positive when an unclaimed ground truth lies
    within ``threshold`` of it at the current frame and one of its mode
    endpoints lies within ``threshold`` of that ground truth's final
    position; it claims the nearest such ground truth.
    """
    config = config or MetricConfig()
    order = sorted(range(len(predictions)), key=lambda i: (-predictions[i].score, i))
    claimed = [False] * len(gts)
    labels = []
    for i in order:
        p = predictions[i]
        endpoints = _endpoint_candidates(p, config.endpoint_any_mode)
        best: tuple[float, int] | None = None
        for j, g in enumerate(gts):
            if claimed[j]:
                continue
            d0 = math.hypot(p.current[0] - g.current[0], p.current[1] - g.current[1])
            if d0 > threshold:
                continue
            gx, gy = g.future.endpoint
            if not any(
                math.hypot(ex - gx, ey - gy) <= threshold for ex, ey in endpoints
            ):
                continue
            if best is None or (d0, j) < best:
                best = (d0, j)
        if best is None:
            labels.append((p.score, False))
        else:
            claimed[best[1]] = True
            labels.append((p.score, True))
    return labels


def average_precision(
    labels: list[tuple[float, bool]], n_gt: int, recall_samples: int
) -> float | None:
    """Interpolated AP from (score, is_tp) labels against n_gt targets."""
    if n_gt == 0:
        return None
    if not labels:
        return 0.0
    labels = sorted(labels, key=lambda t: -t[0])
    tp = fp = 0
    recalls, precisions = [], []
    for _, is_tp in labels:
        if is_tp:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / n_gt)
        precisions.append(tp / (tp + fp))
    ap = 0.0
    for r in np.linspace(0.0, 1.0, recall_samples):
        best = 0.0
        for rec, prec in zip(recalls, precisions):
            if rec >= r - 1e-12 and prec > best:
                best = prec
        ap += best
    return ap / recall_samples


def forecast_ap(
    predictions: list[ForecastPrediction],
    gts: list[ForecastTarget],
    threshold: float,
    config: MetricConfig | None = None,
) -> float | None:
    """AP of one evaluation cell; caller filters class/type/range.

    None (undefined) when the cell has no ground truth.
    """
    config = config or MetricConfig()
    labels = label_predictions(predictions, gts, threshold, config)
    return average_precision(labels, len(gts), config.ap_recall_samples)


@dataclass(frozen=True)
class MapfResult:
    overall: float | None
    per_type: dict[str, float | None]
    per_class: dict[str, float | None]


def _in_range(pos: tuple[float, float], config: MetricConfig) -> bool:
    return math.hypot(pos[0], pos[1]) <= config.eval_range_m


def _target_type(t: ForecastTarget, config: MetricConfig) -> TrajectoryType:
    return classify_trajectory(t.future, t.current, t.past_velocity, config)


def mapf(scenes: list[ForecastScene], config: MetricConfig | None = None) -> MapfResult:
    """Mean forecasting AP over class x trajectory-type x threshold cells.

    Ground truth is stratified by trajectory type; a prediction close to
    a ground truth of another stratum at the current frame (and to none
    of this stratum) is evaluated in that other stratum only, so one
    agent is never double-counted as a false positive across strata.
    Cells without ground truth are excluded from every mean; all-empty
    input yields None rather than 0.
    """
    config = config or MetricConfig()
    per_scene: list[tuple[list[ForecastPrediction], list[ForecastTarget]]] = []
    for scene in scenes:
        preds = [p for p in scene.predictions if _in_range(p.current, config)]
        targets = [t for t in scene.targets if _in_range(t.current, config)]
        per_scene.append((preds, targets))

    classes = sorted(
        {t.agent_class for _, targets in per_scene for t in targets},
        key=lambda c: c.value,
    )
    cells: dict[tuple[AgentClass, TrajectoryType, float], float] = {}
    for agent_class in classes:
        for traj_type in TrajectoryType:
            for threshold in config.ap_thresholds:
                pooled_labels: list[tuple[float, bool]] = []
                pooled_gt = 0
                for preds, targets in per_scene:
                    cell_gts = [
                        t
                        for t in targets
                        if t.agent_class is agent_class
                        and _target_type(t, config) is traj_type
                    ]
                    other_gts = [
                        t
                        for t in targets
                        if t.agent_class is agent_class
                        and _target_type(t, config) is not traj_type
                    ]
                    cell_preds = [
                        p
                        for p in preds
                        if p.agent_class is agent_class
                        and not _absorbed(p, cell_gts, other_gts, threshold)
                    ]
                    pooled_gt += len(cell_gts)
                    pooled_labels.extend(
                        label_predictions(cell_preds, cell_gts, threshold, config)
                    )
                ap = average_precision(
                    pooled_labels, pooled_gt, config.ap_recall_samples
                )
                if ap is not None:
                    cells[(agent_class, traj_type, threshold)] = ap

    def mean_over(keys: list[tuple[AgentClass, TrajectoryType, float]]) -> float | None:
        if not keys:
            return None
        return sum(cells[k] for k in keys) / len(keys)

    overall = mean_over(list(cells))
    per_type = {
        tt.value: mean_over([k for k in cells if k[1] is tt]) for tt in TrajectoryType
    }
    per_class = {
        c.value: mean_over([k for k in cells if k[0] is c]) for c in classes
    }
    return MapfResult(overall=overall, per_type=per_type, per_class=per_class)


def _absorbed(
    p: ForecastPrediction,
    cell_gts: list[ForecastTarget],
    other_gts: list[ForecastTarget],
    threshold: float,
) -> bool:
    """True when the prediction belongs to a different type stratum:
    within threshold of some other-stratum ground truth at the current
    frame and of none in this stratum."""

    def near(gts: list[ForecastTarget]) -> bool:
        return any(
            math.hypot(p.current[0] - g.current[0], p.current[1] - g.current[1])
            <= threshold
            for g in gts
        )

    return near(other_gts) and not near(cell_gts)


def aggregate_displacement(
    scenes: list[ForecastScene], config: MetricConfig | None = None
) -> tuple[float, float] | None:
    """Mean (ADE, FDE) over detected agents across scenes.

    Agents are matched per scene by a gated one-to-one assignment on
    current-frame distance; unmatched ground truth and predictions do
    not contribute. None when nothing matches.
    """
    config = config or MetricConfig()
    ades, fdes = [], []
    for scene in scenes:
        preds = [p for p in scene.predictions if _in_range(p.current, config)]
        targets = [t for t in scene.targets if _in_range(t.current, config)]
        if not preds or not targets:
            continue
        dist = np.zeros((len(preds), len(targets)))
        allowed = np.zeros_like(dist, dtype=bool)
        for i, p in enumerate(preds):
            for j, t in enumerate(targets):
                d = math.hypot(
                    p.current[0] - t.current[0], p.current[1] - t.current[1]
                )
                dist[i, j] = d
                allowed[i, j] = (
                    d <= config.match_threshold_m and p.agent_class is t.agent_class
                )
        for i, j in solve_gated_assignment(dist, allowed):
            a, f = displacement_errors(preds[i].forecast, targets[j].future)
            ades.append(a)
            fdes.append(f)
    if not ades:
        return None
    return sum(ades) / len(ades), sum(fdes) / len(fdes)


# ---------------------------------------------------------------------------
# Tracking metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _FrameDet:
    uid: int
    agent_class: AgentClass
    x: float
    y: float


def _gt_frame_dets(
    gts: list[GtAgent], frame: int, config: MetricConfig
) -> list[_FrameDet]:
    dets = []
    for gt in gts:
        box = gt.box_at(frame)
        if box is not None and _in_range((box.cx, box.cy), config):
            dets.append(_FrameDet(gt.agent_id, gt.agent_class, box.cx, box.cy))
    return dets


def _track_frame_dets(
    tracks: list[Track], frame: int, config: MetricConfig
) -> list[_FrameDet]:
    dets = []
    for track in tracks:
        point = track.point_at(frame)
        if point is not None and _in_range((point.box.cx, point.box.cy), config):
            dets.append(
                _FrameDet(track.track_id, track.agent_class, point.box.cx, point.box.cy)
            )
    return dets


def _frame_span(tracks: list[Track], gts: list[GtAgent]) -> range:
    frames = [t.first_frame for t in tracks] + [g.first_frame for g in gts]
    if not frames:
        return range(0)
    last = max([t.last_frame for t in tracks] + [g.last_frame for g in gts])
    return range(min(frames), last + 1)


@dataclass(frozen=True)
class HotaResult:
    hota: float
    deta: float
    assa: float


def hota(
    tracks: list[Track], gts: list[GtAgent], config: MetricConfig | None = None
) -> HotaResult | None:
    """Higher-order tracking accuracy with a distance similarity.

    Similarity is 1 - d / match_threshold, so a pair is matchable at
    level alpha exactly when d <= match_threshold * (1 - alpha).
    Returns the mean over alphas of sqrt(DetA * AssA); None when there
    is no ground truth in range.
    """
    config = config or MetricConfig()
    frames = _frame_span(tracks, gts)
    per_frame: list[tuple[list[_FrameDet], list[_FrameDet], np.ndarray]] = []
    n_gt_total = 0
    for frame in frames:
        gt_dets = _gt_frame_dets(gts, frame, config)
        tr_dets = _track_frame_dets(tracks, frame, config)
        n_gt_total += len(gt_dets)
        sim = np.zeros((len(tr_dets), len(gt_dets)))
        for i, td in enumerate(tr_dets):
            for j, gd in enumerate(gt_dets):
                if td.agent_class is not gd.agent_class:
                    sim[i, j] = -1.0
                else:
                    d = math.hypot(td.x - gd.x, td.y - gd.y)
                    sim[i, j] = 1.0 - d / config.match_threshold_m
        per_frame.append((tr_dets, gt_dets, sim))
    if n_gt_total == 0:
        return None

    hotas, detas, assas = [], [], []
    for alpha in config.hota_alphas:
        tp = fn = fp = 0
        match_counts: dict[tuple[int, int], int] = {}
        gt_totals: dict[int, int] = {}
        tr_totals: dict[int, int] = {}
        for tr_dets, gt_dets, sim in per_frame:
            for gd in gt_dets:
                gt_totals[gd.uid] = gt_totals.get(gd.uid, 0) + 1
            for td in tr_dets:
                tr_totals[td.uid] = tr_totals.get(td.uid, 0) + 1
            pairs = solve_gated_assignment(-sim, sim >= alpha)
            tp += len(pairs)
            fn += len(gt_dets) - len(pairs)
            fp += len(tr_dets) - len(pairs)
            for i, j in pairs:
                key = (tr_dets[i].uid, gt_dets[j].uid)
                match_counts[key] = match_counts.get(key, 0) + 1
        deta = tp / (tp + fn + fp) if (tp + fn + fp) else 0.0
        if tp:
            ass_sum = 0.0
            for (tid, gid), m in match_counts.items():
                union = gt_totals[gid] + tr_totals[tid] - m
                ass_sum += m * (m / union)
            assa = ass_sum / tp
        else:
            assa = 0.0
        detas.append(deta)
        assas.append(assa)
        hotas.append(math.sqrt(deta * assa))
    n = len(config.hota_alphas)
    return HotaResult(
        hota=sum(hotas) / n, deta=sum(detas) / n, assa=sum(assas) / n
    )


@dataclass(frozen=True)
class MotResult:
    mota: float
    mota_raw: float
    recall: float
    tp: int
    fp: int
    fn: int
    ids: int
    n_gt: int


def clear_mot(
    tracks: list[Track], gts: list[GtAgent], config: MetricConfig | None = None
) -> MotResult:
    """CLEAR-style counting with 2D center-distance gating.

    Matching prefers carrying over the previous frame's association
    before optimally assigning the remainder, the convention that keeps
    identity switches from being counted on mere tie flips.
    """
    config = config or MetricConfig()
    gate = config.match_threshold_m
    tp = fp = fn = ids = n_gt = 0
    prev_match: dict[int, int] = {}  # gt uid -> track uid while matched
    last_seen: dict[int, int] = {}  # gt uid -> last matched track uid ever
    for frame in _frame_span(tracks, gts):
        gt_dets = _gt_frame_dets(gts, frame, config)
        tr_dets = _track_frame_dets(tracks, frame, config)
        n_gt += len(gt_dets)

        matches: dict[int, int] = {}
        used_tracks: set[int] = set()
        tr_by_uid = {td.uid: td for td in tr_dets}
        for gd in gt_dets:
            tid = prev_match.get(gd.uid)
            if tid is None or tid in used_tracks or tid not in tr_by_uid:
                continue
            td = tr_by_uid[tid]
            if td.agent_class is gd.agent_class and (
                math.hypot(td.x - gd.x, td.y - gd.y) <= gate
            ):
                matches[gd.uid] = tid
                used_tracks.add(tid)

        free_gts = [gd for gd in gt_dets if gd.uid not in matches]
        free_trs = [td for td in tr_dets if td.uid not in used_tracks]
        if free_gts and free_trs:
            dist = np.zeros((len(free_trs), len(free_gts)))
            allowed = np.zeros_like(dist, dtype=bool)
            for i, td in enumerate(free_trs):
                for j, gd in enumerate(free_gts):
                    d = math.hypot(td.x - gd.x, td.y - gd.y)
                    dist[i, j] = d
                    allowed[i, j] = d <= gate and td.agent_class is gd.agent_class
            for i, j in solve_gated_assignment(dist, allowed):
                matches[free_gts[j].uid] = free_trs[i].uid
                used_tracks.add(free_trs[i].uid)

        tp += len(matches)
        fn += len(gt_dets) - len(matches)
        fp += len(tr_dets) - len(matches)
        for gid, tid in matches.items():
            if gid in last_seen and last_seen[gid] != tid:
                ids += 1
            last_seen[gid] = tid
        prev_match = dict(matches)

    if n_gt == 0:
        return MotResult(0.0, 0.0, 0.0, 0, 0, 0, 0, 0)
    raw = 1.0 - (fp + fn + ids) / n_gt
    return MotResult(
        mota=min(1.0, max(0.0, raw)),
        mota_raw=raw,
        recall=tp / n_gt,
        tp=tp,
        fp=fp,
        fn=fn,
        ids=ids,
        n_gt=n_gt,
    )


def mota(
    tracks: list[Track], gts: list[GtAgent], config: MetricConfig | None = None
) -> float:
    return clear_mot(tracks, gts, config).mota


def amota(
    tracks: list[Track], gts: list[GtAgent], config: MetricConfig | None = None
) -> float | None:
    """Mean recall-normalized MOTA over the configured recall sweep.

    At each target recall the tracks are thresholded by score at the
    highest threshold still achieving it; unachievable recalls score 0.
    None when there is no ground truth in range.
    """
    config = config or MetricConfig()
    base = clear_mot(tracks, gts, config)
    if base.n_gt == 0:
        return None
    thresholds = sorted({t.score for t in tracks}, reverse=True)
    curve = []
    for tau in thresholds:
        kept = [t for t in tracks if t.score >= tau]
        curve.append((tau, clear_mot(kept, gts, config)))

    values = []
    for r in config.amota_recalls:
        chosen: MotResult | None = None
        for _, res in curve:  # descending threshold, non-decreasing recall
            if res.recall >= r:
                chosen = res
                break
        if chosen is None:
            values.append(0.0)
            continue
        p = chosen.n_gt
        motar = 1.0 - (chosen.fp + chosen.fn + chosen.ids - (1.0 - r) * p) / (r * p)
        values.append(min(1.0, max(0.0, motar)))
    return sum(values) / len(values)
