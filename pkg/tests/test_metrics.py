"""Forecasting and tracking metrics against hand-computed values."""

from __future__ import annotations

import random

import pytest

from trackcast.core import (
    AgentClass,
    Box3D,
    ForecastMode,
    ForecastSet,
    FutureTrajectory,
    GtAgent,
)
from trackcast.metrics import (
    ForecastPrediction,
    ForecastScene,
    ForecastTarget,
    MetricConfig,
    TrajectoryType,
    aggregate_displacement,
    amota,
    average_precision,
    classify_trajectory,
    clear_mot,
    displacement_errors,
    forecast_ap,
    hota,
    label_predictions,
    mapf,
)
from trackcast.tracking import KalmanParams, Track, TrackPoint, kf_init

VEH = AgentClass.REGULAR_VEHICLE
CONFIG = MetricConfig()


def _box(x, y=0.0):
    return Box3D(x, y, 0.8, 4.0, 2.0, 1.6, 0.0)


def _gt(agent_id, positions, first_frame=0, cls=VEH):
    boxes = tuple(
        (first_frame + i, _box(float(x), float(y)))
        for i, (x, y) in enumerate(positions)
    )
    return GtAgent(agent_id, cls, boxes)


def _track(track_id, positions, first_frame=0, cls=VEH, score=0.5):
    points = [
        TrackPoint(first_frame + i, _box(float(x), float(y)), observed=True)
        for i, (x, y) in enumerate(positions)
    ]
    return Track(track_id, cls, points, kf_init(points[0].box, KalmanParams()), score=score)


def _future(waypoints):
    return FutureTrajectory(tuple(waypoints))


def _fs(*mode_specs):
    """ForecastSet from (waypoints, score) pairs."""
    return ForecastSet(
        tuple(ForecastMode(_future(w), s) for w, s in mode_specs)
    )


def _static_fs(x, y, steps=3, score=1.0):
    return _fs(([(x, y)] * steps, score))


def _pred(agent_id, current, forecast, score=0.9, cls=VEH):
    return ForecastPrediction(agent_id, cls, score, current, forecast)


def _target(agent_id, current, future, cls=VEH, past_velocity=(0.0, 0.0)):
    return ForecastTarget(agent_id, cls, current, _future(future), past_velocity)


# ---------------------------------------------------------------------------
# Trajectory classification
# ---------------------------------------------------------------------------


def test_classify_static_by_endpoint_displacement():
    future = _future([(0.2, 0.0), (0.3, 0.0), (0.5, 0.0)])
    got = classify_trajectory(future, (0.0, 0.0), (1.0, 0.0), CONFIG)
    assert got is TrajectoryType.STATIC


def test_classify_linear_follows_constant_velocity():
    future = _future([(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0), (5.0, 0.0)])
    got = classify_trajectory(future, (0.0, 0.0), (1.0, 0.0), CONFIG)
    assert got is TrajectoryType.LINEAR


def test_classify_non_linear_on_turns():
    # Past velocity points along +x but the agent ends up on the y axis.
    future = _future([(1.0, 1.0), (1.0, 2.0), (0.5, 3.5), (0.0, 5.0)])
    got = classify_trajectory(future, (0.0, 0.0), (1.0, 0.0), CONFIG)
    assert got is TrajectoryType.NON_LINEAR


def test_classify_static_threshold_is_strict():
    # Endpoint displacement exactly 1 m is not static; the matching
    # constant-velocity extrapolation makes it linear.
    future = _future([(0.2, 0.0), (0.4, 0.0), (0.6, 0.0), (0.8, 0.0), (1.0, 0.0)])
    got = classify_trajectory(future, (0.0, 0.0), (0.2, 0.0), CONFIG)
    assert got is TrajectoryType.LINEAR


# ---------------------------------------------------------------------------
# Displacement errors
# ---------------------------------------------------------------------------


def test_displacement_constant_offset():
    gt = _future([(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)])
    pred = _fs(([(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)], 1.0))
    assert displacement_errors(pred, gt) == (1.0, 1.0)


def test_fde_comes_from_the_min_ade_mode():
    gt = _future([(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)])
    steady = [(1.0, 2.0), (2.0, 2.0), (3.0, 2.0), (4.0, 2.0)]  # ADE 2, FDE 2
    late_miss = [(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 4.0)]  # ADE 1, FDE 4
    a, f = displacement_errors(_fs((steady, 0.6), (late_miss, 0.4)), gt)
    # The FDE follows the mode with the best ADE, even though the other
    # mode's final step is closer.
    assert (a, f) == (1.0, 4.0)


def test_displacement_horizon_mismatch_raises():
    gt = _future([(1.0, 0.0), (2.0, 0.0)])
    with pytest.raises(ValueError):
        displacement_errors(_static_fs(0.0, 0.0, steps=3), gt)


# ---------------------------------------------------------------------------
# AP machinery
# ---------------------------------------------------------------------------


def test_average_precision_hand_values():
    assert average_precision([(0.9, True), (0.8, True)], 2, 101) == 1.0
    assert abs(average_precision([(0.9, True)], 2, 101) - 51 / 101) <= 1e-12
    assert average_precision([(0.9, True), (0.8, False)], 1, 101) == 1.0
    assert average_precision([(0.9, False), (0.8, True)], 1, 101) == 0.5
    assert average_precision([], 3, 101) == 0.0
    assert average_precision([(0.9, True)], 0, 101) is None


def test_label_predictions_requires_matching_endpoint():
    gts = [_target(0, (0.0, 0.0), [(5.0, 0.0), (10.0, 0.0)])]
    pred = _pred(0, (0.0, 0.0), _static_fs(0.0, 0.0, steps=2))
    assert label_predictions([pred], gts, 2.0) == [(0.9, False)]


def test_label_predictions_any_mode_endpoint():
    gts = [_target(0, (0.0, 0.0), [(5.0, 0.0), (10.0, 0.0)])]
    pred = _pred(
        0,
        (0.0, 0.0),
        _fs(([(0.0, 0.0), (0.0, 0.0)], 0.6), ([(5.0, 0.0), (10.0, 0.0)], 0.4)),
    )
    assert label_predictions([pred], gts, 2.0) == [(0.9, True)]
    top_only = MetricConfig(endpoint_any_mode=False)
    assert label_predictions([pred], gts, 2.0, top_only) == [(0.9, False)]


def test_label_predictions_greedy_claiming():
    gts = [
        _target(0, (0.0, 0.0), [(0.0, 0.0)]),
        _target(1, (1.5, 0.0), [(1.5, 0.0)]),
    ]
    preds = [
        _pred(0, (0.4, 0.0), _static_fs(0.4, 0.0, steps=1), score=0.9),
        _pred(1, (0.0, 0.0), _static_fs(0.0, 0.0, steps=1), score=0.8),
    ]
    # The higher-scored prediction claims the nearer ground truth; the
    # second must take the remaining one.
    assert label_predictions(preds, gts, 2.0) == [(0.9, True), (0.8, True)]


def test_forecast_ap_simple_cases():
    gts = [_target(0, (0.0, 0.0), [(0.0, 0.0)])]
    hit = _pred(0, (0.0, 0.0), _static_fs(0.0, 0.0, steps=1))
    assert forecast_ap([hit], gts, 2.0) == 1.0
    far = _pred(0, (30.0, 0.0), _static_fs(30.0, 0.0, steps=1))
    assert forecast_ap([far], gts, 2.0) == 0.0
    assert forecast_ap([hit], [], 2.0) is None


# ---------------------------------------------------------------------------
# mAP_f
# ---------------------------------------------------------------------------


def _absorption_scene():
    gt_static = _target(0, (0.0, 0.0), [(0.0, 0.0)] * 5)
    gt_linear = _target(
        1,
        (30.0, 0.0),
        [(31.0, 0.0), (32.0, 0.0), (33.0, 0.0), (34.0, 0.0), (35.0, 0.0)],
        past_velocity=(1.0, 0.0),
    )
    pred_static = _pred(0, (0.0, 0.0), _static_fs(0.0, 0.0, steps=5), score=0.9)
    pred_linear = _pred(
        1,
        (30.0, 0.0),
        _fs(([(31.0, 0.0), (32.0, 0.0), (33.0, 0.0), (34.0, 0.0), (35.0, 0.0)], 1.0)),
        score=0.5,
    )
    return ForecastScene(
        predictions=(pred_static, pred_linear), targets=(gt_static, gt_linear)
    )


def test_mapf_stratum_absorption():
    # Each prediction sits on a ground truth of its own stratum; without
    # absorption the static prediction would outrank the linear one in
    # the linear cell and halve its AP.
    result = mapf([_absorption_scene()])
    assert result.per_type["static"] == 1.0
    assert result.per_type["linear"] == 1.0
    assert result.per_type["non_linear"] is None
    assert result.overall == 1.0
    assert result.per_class == {"regular_vehicle": 1.0}


def test_mapf_pools_labels_across_scenes():
    gt = _target(0, (0.0, 0.0), [(0.0, 0.0)] * 3)
    scene_hit = ForecastScene(
        predictions=(_pred(0, (0.0, 0.0), _static_fs(0.0, 0.0), score=0.9),),
        targets=(gt,),
    )
    scene_miss = ForecastScene(
        predictions=(
            _pred(0, (0.0, 0.0), _fs(([(4.0, 0.0), (7.0, 0.0), (10.0, 0.0)], 1.0)), score=0.8),
        ),
        targets=(gt,),
    )
    result = mapf([scene_hit, scene_miss])
    # Pooled: TP then FP against 2 targets -> AP 51/101 in every static
    # cell. Scene-averaged AP would give 0.5 instead.
    assert abs(result.overall - 51 / 101) <= 1e-12


def test_mapf_prediction_order_invariance():
    rng = random.Random(4)
    targets = []
    preds = []
    for i in range(5):
        x, y = rng.uniform(-20, 20), rng.uniform(-20, 20)
        targets.append(_target(i, (x, y), [(x, y)] * 3))
        px, py = x + rng.uniform(-1, 1), y + rng.uniform(-1, 1)
        preds.append(
            _pred(i, (px, py), _static_fs(px, py), score=(i + 1) / 10.0)
        )
    base = mapf([ForecastScene(tuple(preds), tuple(targets))])
    shuffled = list(preds)
    rng.shuffle(shuffled)
    other = mapf([ForecastScene(tuple(shuffled), tuple(targets))])
    assert other == base


def test_mapf_range_filter_and_empty():
    gt = _target(0, (60.0, 0.0), [(60.0, 0.0)] * 2)
    pred = _pred(0, (60.0, 0.0), _static_fs(60.0, 0.0, steps=2))
    result = mapf([ForecastScene((pred,), (gt,))])
    assert result.overall is None
    assert result.per_class == {}
    assert mapf([]).overall is None


# ---------------------------------------------------------------------------
# Aggregate displacement
# ---------------------------------------------------------------------------


def test_aggregate_displacement_hand_value():
    scene = ForecastScene(
        predictions=(
            _pred(0, (0.0, 0.0), _fs(([(1.0, 1.0), (2.0, 2.0)], 1.0))),
        ),
        targets=(_target(0, (0.0, 0.0), [(1.0, 0.0), (2.0, 0.0)]),),
    )
    got = aggregate_displacement([scene])
    assert got is not None
    assert got == (1.5, 2.0)


def test_aggregate_displacement_mean_over_matches():
    hit = ForecastScene(
        predictions=(_pred(0, (0.0, 0.0), _fs(([(1.0, 0.0), (2.0, 0.0)], 1.0))),),
        targets=(_target(0, (0.0, 0.0), [(1.0, 0.0), (2.0, 0.0)]),),
    )
    off = ForecastScene(
        predictions=(_pred(0, (0.0, 0.0), _fs(([(1.0, 1.0), (2.0, 2.0)], 1.0))),),
        targets=(_target(0, (0.0, 0.0), [(1.0, 0.0), (2.0, 0.0)]),),
    )
    assert aggregate_displacement([hit, off]) == (0.75, 1.0)


def test_aggregate_displacement_respects_gate_and_class():
    gt = _target(0, (0.0, 0.0), [(0.0, 0.0)])
    far = _pred(0, (5.0, 0.0), _static_fs(5.0, 0.0, steps=1))
    other = _pred(0, (0.0, 0.0), _static_fs(0.0, 0.0, steps=1), cls=AgentClass.BUS)
    assert aggregate_displacement([ForecastScene((far,), (gt,))]) is None
    assert aggregate_displacement([ForecastScene((other,), (gt,))]) is None


# ---------------------------------------------------------------------------
# HOTA
# ---------------------------------------------------------------------------


def test_hota_perfect_tracking():
    gts = [_gt(0, [(f, 0.0) for f in range(5)])]
    tracks = [_track(0, [(f, 0.0) for f in range(5)])]
    result = hota(tracks, gts)
    assert result is not None
    assert (result.hota, result.deta, result.assa) == (1.0, 1.0, 1.0)


def test_hota_distance_one_matches_low_alphas_only():
    # d = 1 gives similarity 0.5: matchable at the 10 alphas <= 0.5.
    gts = [_gt(0, [(f, 0.0) for f in range(3)])]
    tracks = [_track(0, [(f, 1.0) for f in range(3)])]
    result = hota(tracks, gts)
    assert result is not None
    assert abs(result.hota - 10 / 19) <= 1e-12
    assert abs(result.deta - 10 / 19) <= 1e-12
    assert abs(result.assa - 10 / 19) <= 1e-12


def test_hota_class_mismatch_never_matches():
    gts = [_gt(0, [(0.0, 0.0)])]
    tracks = [_track(0, [(0.0, 0.0)], cls=AgentClass.BUS)]
    result = hota(tracks, gts)
    assert result is not None and result.hota == 0.0


def test_hota_undefined_without_ground_truth():
    assert hota([_track(0, [(0.0, 0.0)])], []) is None
    result = hota([], [_gt(0, [(0.0, 0.0)])])
    assert result is not None and result.hota == 0.0


# ---------------------------------------------------------------------------
# CLEAR MOT
# ---------------------------------------------------------------------------


def test_clear_mot_perfect():
    gts = [_gt(0, [(f, 0.0) for f in range(5)]), _gt(1, [(f, 9.0) for f in range(5)])]
    tracks = [
        _track(0, [(f, 0.0) for f in range(5)]),
        _track(1, [(f, 9.0) for f in range(5)]),
    ]
    result = clear_mot(tracks, gts)
    assert (result.tp, result.fp, result.fn, result.ids) == (10, 0, 0, 0)
    assert result.mota == 1.0 and result.recall == 1.0


def test_clear_mot_counts_misses_and_strays():
    gts = [_gt(0, [(f, 0.0) for f in range(5)])]
    tracks = [
        _track(0, [(f, 0.0) for f in range(3)]),  # misses frames 3-4
        _track(1, [(f, 30.0) for f in range(5)]),  # out of gate throughout
    ]
    result = clear_mot(tracks, gts)
    assert (result.tp, result.fp, result.fn, result.ids) == (3, 5, 2, 0)
    assert result.mota_raw == 1.0 - 7 / 5
    assert result.mota == 0.0  # clamped
    assert result.recall == 3 / 5


def test_clear_mot_id_switch_on_handover():
    gts = [_gt(0, [(f, 0.0) for f in range(4)])]
    tracks = [
        _track(0, [(0.0, 0.0), (1.0, 0.0)], first_frame=0),
        _track(1, [(2.0, 0.0), (3.0, 0.0)], first_frame=2),
    ]
    result = clear_mot(tracks, gts)
    assert (result.tp, result.ids) == (4, 1)
    assert result.mota == 0.75


def test_clear_mot_carry_over_prevents_tie_flips():
    # Two equidistant tracks shadow one agent; whichever wins frame 0
    # keeps the match, so no switch is ever counted.
    gts = [_gt(0, [(0.0, 0.0), (0.0, 0.0)])]
    tracks = [
        _track(0, [(1.0, 0.0), (1.0, 0.0)]),
        _track(1, [(-1.0, 0.0), (-1.0, 0.0)]),
    ]
    result = clear_mot(tracks, gts)
    assert (result.tp, result.fp, result.ids) == (2, 2, 0)


def test_clear_mot_empty_inputs():
    result = clear_mot([], [])
    assert result.n_gt == 0 and result.mota == 0.0


# ---------------------------------------------------------------------------
# AMOTA
# ---------------------------------------------------------------------------


def test_amota_half_coverage_hand_value():
    gts = [
        _gt(0, [(f, 0.0) for f in range(10)]),
        _gt(1, [(f, 9.0) for f in range(10)]),
    ]
    tracks = [_track(0, [(f, 0.0) for f in range(10)], score=0.7)]
    # Recall 0.5: the 20 recall targets at or below it reach a clamped
    # MOTAR of 1, the other 20 are unachievable.
    assert amota(tracks, gts) == 0.5


def test_amota_perfect():
    gts = [_gt(0, [(f, 0.0) for f in range(6)])]
    tracks = [_track(0, [(f, 0.0) for f in range(6)], score=0.9)]
    assert amota(tracks, gts) == 1.0


def test_amota_sweep_drops_low_scored_strays():
    gts = [_gt(0, [(f, 0.0) for f in range(4)])]
    tracks = [
        _track(0, [(f, 0.0) for f in range(4)], score=0.9),
        _track(1, [(f, 30.0) for f in range(4)], score=0.2),
    ]
    # The best operating point excludes the stray, so the sweep is clean
    # even though the unthresholded MOTA is not.
    assert amota(tracks, gts) == 1.0
    assert clear_mot(tracks, gts).mota_raw == 0.0


def test_amota_undefined_without_ground_truth():
    assert amota([_track(0, [(0.0, 0.0)])], []) is None


def test_metric_config_validation():
    with pytest.raises(ValueError):
        MetricConfig(match_threshold_m=0.0)
