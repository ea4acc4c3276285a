"""Kalman filter behavior, tracker lifecycle, and gap interpolation."""

from __future__ import annotations

import math

import pytest

from trackcast.core import AgentClass, Box3D, Detection
from trackcast.tracking import (
    KalmanParams,
    KalmanState,
    Track,
    TrackPoint,
    Tracker,
    TrackerConfig,
    TrackState,
    box_from_state,
    interpolate_gaps,
    kf_init,
    kf_predict,
    kf_update,
)

DIMS = (4.6, 1.9, 1.6)


def _vbox(cx, cy=0.0, yaw=0.0):
    return Box3D(cx, cy, DIMS[2] / 2, *DIMS, yaw)


def _vdet(cx, frame, cy=0.0, score=0.9, cls=AgentClass.REGULAR_VEHICLE, yaw=0.0):
    return Detection(_vbox(cx, cy, yaw), cls, score, frame)


def test_kf_init_matches_measurement():
    state = kf_init(_vbox(3.0, -1.0, 0.5), KalmanParams())
    box = box_from_state(state)
    assert (box.cx, box.cy, box.cz) == (3.0, -1.0, DIMS[2] / 2)
    assert box.yaw == 0.5
    assert (box.length, box.width, box.height) == DIMS
    # Velocities start at zero with a wide prior.
    assert list(state.mean[7:]) == [0.0, 0.0, 0.0]
    assert state.cov[7, 7] == 10.0


def test_kf_learns_constant_velocity():
    """After a few updates on a constant-velocity target, the one-step
    prediction lands close to the true next position."""
    params = KalmanParams()
    v = 0.8  # metres per frame
    state = kf_init(_vbox(0.0), params)
    for frame in range(1, 8):
        state = kf_predict(state, params)
        state = kf_update(state, _vdet(v * frame, frame), params)
    predicted = box_from_state(kf_predict(state, params))
    assert abs(predicted.cx - v * 8) < 0.05
    assert abs(state.mean[7] - v) < 0.05


def test_kf_yaw_innovation_wraps():
    """Measurements across the angular cut must not drag yaw through a
    near-two-pi correction."""
    params = KalmanParams()
    state = kf_init(_vbox(0.0, yaw=math.pi - 0.05), params)
    state = kf_predict(state, params)
    state = kf_update(state, _vdet(0.0, 1, yaw=-math.pi + 0.05), params)
    # The posterior stays near the cut instead of swinging toward 0.
    assert abs(abs(state.mean[3]) - math.pi) < 0.2


def test_kf_covariance_stays_symmetric():
    params = KalmanParams()
    state = kf_init(_vbox(0.0), params)
    for frame in range(1, 20):
        state = kf_predict(state, params)
        state = kf_update(state, _vdet(0.3 * frame, frame), params)
        assert (abs(state.cov - state.cov.T) < 1e-12).all()


def test_single_agent_single_track():
    tracker = Tracker()
    scores = []
    for frame in range(20):
        score = 0.5 + 0.02 * frame
        scores.append(score)
        tracker.step(frame, [_vdet(0.5 * frame, frame, score=score)])
    tracks = tracker.finish()
    assert len(tracks) == 1
    track = tracks[0]
    assert track.track_id == 0
    assert track.first_frame == 0 and track.last_frame == 19
    assert all(p.observed for p in track.points)
    assert track.n_matches == 20
    assert abs(track.score - sum(scores) / 20) <= 1e-12
    # Observed points store the raw detection boxes, not the filter state.
    assert track.points[7].box.cx == 0.5 * 7


def test_tracker_rejects_frame_skips_and_mislabeled_dets():
    tracker = Tracker()
    tracker.step(0, [_vdet(0.0, 0)])
    with pytest.raises(ValueError):
        tracker.step(2, [])
    with pytest.raises(ValueError):
        tracker.step(1, [_vdet(0.0, 5)])


def test_tracker_gates_by_iou_and_class():
    tracker = Tracker()
    tracker.step(0, [_vdet(0.0, 0)])
    # Same class far away: below the IoU gate, so a second track spawns.
    tracker.step(1, [_vdet(30.0, 1)])
    assert len(tracker.tracks) == 2
    # Overlapping box of a different class never matches either track.
    tracker.step(2, [_vdet(30.0, 2, cls=AgentClass.BUS)])
    assert len(tracker.tracks) == 3


def test_inactive_track_revives_within_limit():
    tracker = Tracker()
    positions = {0: 0.0, 1: 0.5, 4: 2.0, 5: 2.5}  # gap at frames 2-3
    for frame in range(6):
        dets = [_vdet(positions[frame], frame)] if frame in positions else []
        tracker.step(frame, dets)
    assert len(tracker.tracks) == 1
    track = tracker.tracks[0]
    assert track.state is TrackState.ACTIVE
    observed = [p.observed for p in track.points]
    assert observed == [True, True, False, False, True, True]


def test_termination_after_inactivity_limit():
    config = TrackerConfig(max_inactive_frames=2)
    tracker = Tracker(config)
    tracker.step(0, [_vdet(0.0, 0)])
    for frame in range(1, 5):
        tracker.step(frame, [])
    track = tracker.tracks[0]
    assert track.state is TrackState.TERMINATED
    # Exactly max_inactive_frames propagated points, then nothing.
    assert track.last_frame == 2
    assert [p.observed for p in track.points] == [True, False, False]


def test_interpolate_gaps_linear_fill():
    boxes = {
        2: _vbox(2.0, 0.0),
        5: _vbox(8.0, 3.0),
    }
    points = [
        TrackPoint(1, _vbox(-9.0, -9.0), observed=False),  # dangling head
        TrackPoint(2, boxes[2], observed=True),
        TrackPoint(3, _vbox(50.0, 50.0), observed=False),
        TrackPoint(4, _vbox(60.0, 60.0), observed=False),
        TrackPoint(5, boxes[5], observed=True),
        TrackPoint(6, _vbox(99.0, 99.0), observed=False),  # dangling tail
    ]
    track = Track(
        track_id=0,
        agent_class=AgentClass.REGULAR_VEHICLE,
        points=points,
        kalman=kf_init(boxes[2], KalmanParams()),
    )
    out = interpolate_gaps(track)
    assert out.first_frame == 2 and out.last_frame == 5
    filled = {p.frame: p for p in out.points}
    assert not filled[3].observed and not filled[4].observed
    assert abs(filled[3].box.cx - 4.0) <= 1e-12
    assert abs(filled[4].box.cx - 6.0) <= 1e-12
    assert abs(filled[3].box.cy - 1.0) <= 1e-12
    assert abs(filled[4].box.cy - 2.0) <= 1e-12


def test_interpolate_gaps_yaw_shorter_arc():
    a = _vbox(0.0, yaw=math.pi - 0.2)
    b = _vbox(2.0, yaw=-math.pi + 0.2)
    track = Track(
        track_id=0,
        agent_class=AgentClass.REGULAR_VEHICLE,
        points=[
            TrackPoint(0, a, True),
            TrackPoint(1, _vbox(1.0), False),
            TrackPoint(2, b, True),
        ],
        kalman=kf_init(a, KalmanParams()),
    )
    mid = interpolate_gaps(track).points[1].box
    # Halfway along the short arc crossing the cut, i.e. at +-pi.
    assert abs(abs(mid.yaw) - math.pi) <= 1e-9


def test_interpolate_gaps_requires_observation():
    track = Track(
        track_id=0,
        agent_class=AgentClass.REGULAR_VEHICLE,
        points=[TrackPoint(0, _vbox(0.0), False)],
        kalman=kf_init(_vbox(0.0), KalmanParams()),
    )
    with pytest.raises(ValueError):
        interpolate_gaps(track)


def test_tracker_config_validation():
    with pytest.raises(ValueError):
        TrackerConfig(iou_gate=1.5)
    with pytest.raises(ValueError):
        TrackerConfig(max_inactive_frames=-1)


def test_kalman_state_copy_is_independent():
    state = kf_init(_vbox(0.0), KalmanParams())
    clone = state.copy()
    clone.mean[0] = 99.0
    assert state.mean[0] == 0.0
    assert isinstance(clone, KalmanState)
