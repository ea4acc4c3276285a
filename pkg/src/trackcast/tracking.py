"""Per-class online 3D multi-object tracking.

Each track runs a constant-velocity Kalman filter over the state
(cx, cy, cz, yaw, length, width, height, vx, vy, vz); velocities are in
meters per frame. Association is an exact min-cost one-to-one matching
on 1 - IoU, gated at a minimum IoU. Tracks unmatched for more than
``max_inactive_frames`` consecutive frames are terminated.

Observed track points store the associated raw detection box; frames a
track survives unmatched get the Kalman-predicted box, flagged
unobserved. ``interpolate_gaps`` is the offline pass that replaces
those propagated interior points with straight-line fills and drops
dangling unobserved tails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .assignment import solve_gated_assignment
from .core import AgentClass, Box3D, Detection, yaw_normalize
from .geometry import iou3d

STATE_DIM = 10
OBS_DIM = 7
_YAW = 3  # index of yaw in state and measurement vectors

_F = np.eye(STATE_DIM)
_F[0, 7] = _F[1, 8] = _F[2, 9] = 1.0
_H = np.eye(OBS_DIM, STATE_DIM)


@dataclass(frozen=True)
class KalmanParams:
    """Noise levels for the track filter; all variances."""

    measurement_noise: float = 0.01
    process_noise: float = 0.01
    init_velocity_var: float = 10.0


@dataclass
class KalmanState:
    """Filter mean and covariance; treated as a value, ops return copies."""

    mean: np.ndarray
    cov: np.ndarray

    def copy(self) -> KalmanState:
        return KalmanState(self.mean.copy(), self.cov.copy())


def kf_init(box: Box3D, params: KalmanParams) -> KalmanState:
    mean = np.zeros(STATE_DIM)
    mean[:OBS_DIM] = _measurement(box)
    cov = np.zeros((STATE_DIM, STATE_DIM))
    cov[:OBS_DIM, :OBS_DIM] = np.eye(OBS_DIM) * params.measurement_noise
    cov[OBS_DIM:, OBS_DIM:] = np.eye(STATE_DIM - OBS_DIM) * params.init_velocity_var
    return KalmanState(mean, cov)


def kf_predict(state: KalmanState, params: KalmanParams | None = None) -> KalmanState:
    """One constant-velocity step with additive process noise."""
    params = params or KalmanParams()
    mean = _F @ state.mean
    cov = _F @ state.cov @ _F.T + np.eye(STATE_DIM) * params.process_noise
    return KalmanState(mean, cov)


def kf_update(
    state: KalmanState, det: Detection, params: KalmanParams | None = None
) -> KalmanState:
    """Linear measurement update on the 7 observed components.

    The yaw innovation is wrapped into (-pi, pi] so measurements across
    the angular cut do not produce a near-2*pi correction.
    """
    params = params or KalmanParams()
    z = _measurement(det.box)
    innovation = z - _H @ state.mean
    innovation[_YAW] = yaw_normalize(innovation[_YAW])
    r = np.eye(OBS_DIM) * params.measurement_noise
    s = _H @ state.cov @ _H.T + r
    gain = state.cov @ _H.T @ np.linalg.inv(s)
    mean = state.mean + gain @ innovation
    mean[_YAW] = yaw_normalize(mean[_YAW])
    # Joseph form keeps the covariance symmetric PSD.
    ikh = np.eye(STATE_DIM) - gain @ _H
    cov = ikh @ state.cov @ ikh.T + gain @ r @ gain.T
    cov = (cov + cov.T) / 2.0
    return KalmanState(mean, cov)


def _measurement(box: Box3D) -> np.ndarray:
    return np.array(
        [box.cx, box.cy, box.cz, box.yaw, box.length, box.width, box.height]
    )


def box_from_state(state: KalmanState) -> Box3D:
    m = state.mean
    return Box3D(
        cx=float(m[0]),
        cy=float(m[1]),
        cz=float(m[2]),
        length=max(float(m[4]), 1e-6),
        width=max(float(m[5]), 1e-6),
        height=max(float(m[6]), 1e-6),
        yaw=float(m[3]),
    )


class TrackState(Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class TrackPoint:
    frame: int
    box: Box3D
    observed: bool


@dataclass
class Track:
    """Identity-carrying time series with lifecycle state.

    ``score`` is the running mean of matched detection scores.
    """

    track_id: int
    agent_class: AgentClass
    points: list[TrackPoint]
    kalman: KalmanState
    state: TrackState = TrackState.ACTIVE
    misses: int = 0
    score: float = 0.0
    n_matches: int = 0

    @property
    def first_frame(self) -> int:
        return self.points[0].frame

    @property
    def last_frame(self) -> int:
        return self.points[-1].frame

    def point_at(self, frame: int) -> TrackPoint | None:
        i = frame - self.first_frame
        if 0 <= i < len(self.points):
            return self.points[i]
        return None


@dataclass(frozen=True)
class TrackerConfig:
    iou_gate: float = 0.1
    max_inactive_frames: int = 3
    kalman: KalmanParams = field(default_factory=KalmanParams)

    def __post_init__(self) -> None:
        if not 0.0 <= self.iou_gate <= 1.0:
            raise ValueError("iou_gate must be in [0, 1]")
        if self.max_inactive_frames < 0:
            raise ValueError("max_inactive_frames must be >= 0")


class Tracker:
    """Stateful per-scene tracker; feed frames in order via ``step``."""

    def __init__(self, config: TrackerConfig | None = None) -> None:
        self.config = config or TrackerConfig()
        self.tracks: list[Track] = []
        self._next_id = 0
        self._frame: int | None = None

    @property
    def live_tracks(self) -> list[Track]:
        return [t for t in self.tracks if t.state is not TrackState.TERMINATED]

    def step(self, frame: int, detections: list[Detection]) -> list[Track]:
        """Advance one frame; returns the tracks still alive after it."""
        if self._frame is not None and frame != self._frame + 1:
            raise ValueError(
                f"tracker stepped to frame {frame} after frame {self._frame}"
            )
        bad = [d.frame for d in detections if d.frame != frame]
        if bad:
            raise ValueError(f"detections for frames {sorted(set(bad))} in step {frame}")
        self._frame = frame

        live = self.live_tracks
        predicted: dict[int, Box3D] = {}
        for track in live:
            track.kalman = kf_predict(track.kalman, self.config.kalman)
            predicted[track.track_id] = box_from_state(track.kalman)

        classes = sorted(
            {t.agent_class for t in live} | {d.agent_class for d in detections},
            key=lambda c: c.value,
        )
        for agent_class in classes:
            tracks_c = [t for t in live if t.agent_class is agent_class]
            dets_c = [d for d in detections if d.agent_class is agent_class]
            matched_tracks, matched_dets = self._associate(
                tracks_c, dets_c, predicted, frame
            )
            for track in tracks_c:
                if track.track_id not in matched_tracks:
                    self._miss(track, frame, predicted[track.track_id])
            for i, det in enumerate(dets_c):
                if i not in matched_dets:
                    self._spawn(det)
        return self.live_tracks

    def _associate(
        self,
        tracks: list[Track],
        dets: list[Detection],
        predicted: dict[int, Box3D],
        frame: int,
    ) -> tuple[set[int], set[int]]:
        if not tracks or not dets:
            return set(), set()
        iou = np.zeros((len(tracks), len(dets)))
        for i, track in enumerate(tracks):
            for j, det in enumerate(dets):
                iou[i, j] = iou3d(predicted[track.track_id], det.box)
        pairs = solve_gated_assignment(1.0 - iou, iou >= self.config.iou_gate)
        matched_tracks: set[int] = set()
        matched_dets: set[int] = set()
        for i, j in pairs:
            track, det = tracks[i], dets[j]
            track.kalman = kf_update(track.kalman, det, self.config.kalman)
            track.points.append(TrackPoint(frame, det.box, observed=True))
            track.state = TrackState.ACTIVE
            track.misses = 0
            track.score = (track.score * track.n_matches + det.score) / (
                track.n_matches + 1
            )
            track.n_matches += 1
            matched_tracks.add(track.track_id)
            matched_dets.add(j)
        return matched_tracks, matched_dets

    def _miss(self, track: Track, frame: int, predicted_box: Box3D) -> None:
        track.misses += 1
        if track.misses > self.config.max_inactive_frames:
            track.state = TrackState.TERMINATED
            return
        track.state = TrackState.INACTIVE
        track.points.append(TrackPoint(frame, predicted_box, observed=False))

    def _spawn(self, det: Detection) -> None:
        track = Track(
            track_id=self._next_id,
            agent_class=det.agent_class,
            points=[TrackPoint(det.frame, det.box, observed=True)],
            kalman=kf_init(det.box, self.config.kalman),
            state=TrackState.ACTIVE,
            score=det.score,
            n_matches=1,
        )
        self._next_id += 1
        self.tracks.append(track)

    def finish(self, interpolate: bool = True) -> list[Track]:
        """All tracks ever created, optionally with gaps interpolated."""
        if interpolate:
            return [interpolate_gaps(t) for t in self.tracks]
        return list(self.tracks)


def _lerp(a: float, b: float, t: float) -> float:
    return a + (b - a) * t


def _lerp_yaw(a: float, b: float, t: float) -> float:
    return yaw_normalize(a + yaw_normalize(b - a) * t)


def interpolate_gaps(track: Track) -> Track:
    """Straight-line fill of interior unobserved runs; unobserved
    leading/trailing points are dropped.

    Interior runs bounded by observed points at frames t0 < t1 get each
    component linearly interpolated between the bounding boxes; yaw
    follows the shorter arc. Filled points stay flagged unobserved.
    """
    observed_idx = [i for i, p in enumerate(track.points) if p.observed]
    if not observed_idx:
        raise ValueError("interpolate_gaps requires at least one observed point")
    points = track.points[observed_idx[0] : observed_idx[-1] + 1]

    out: list[TrackPoint] = []
    i = 0
    while i < len(points):
        p = points[i]
        if p.observed:
            out.append(p)
            i += 1
            continue
        j = i
        while not points[j].observed:
            j += 1
        lo, hi = out[-1], points[j]
        span = hi.frame - lo.frame
        for k in range(i, j):
            t = (points[k].frame - lo.frame) / span
            box = Box3D(
                cx=_lerp(lo.box.cx, hi.box.cx, t),
                cy=_lerp(lo.box.cy, hi.box.cy, t),
                cz=_lerp(lo.box.cz, hi.box.cz, t),
                length=_lerp(lo.box.length, hi.box.length, t),
                width=_lerp(lo.box.width, hi.box.width, t),
                height=_lerp(lo.box.height, hi.box.height, t),
                yaw=_lerp_yaw(lo.box.yaw, hi.box.yaw, t),
            )
            out.append(TrackPoint(points[k].frame, box, observed=False))
        i = j
    return Track(
        track_id=track.track_id,
        agent_class=track.agent_class,
        points=out,
        kalman=track.kalman.copy(),
        state=track.state,
        misses=track.misses,
        score=track.score,
        n_matches=track.n_matches,
    )
