"""Line-oriented scene files and the metric report document.

A scene file is JSON-per-line so long scenes stream without loading the
whole file: a mandatory header record first, then any mix of gt, det,
track, forecast, and pair records. Reading validates eagerly and every
complaint carries the 1-based line number it came from.

Writers emit keys sorted and floats in repr form, so identical inputs
always serialize byte-identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .core import (
    AgentClass,
    Box3D,
    Detection,
    ForecastMode,
    ForecastSet,
    FutureTrajectory,
    GtAgent,
    PastSample,
    PastTrajectory,
)
from .matching import TrainingPair
from .tracking import (
    KalmanParams,
    Track,
    TrackPoint,
    TrackState,
    kf_init,
)

_BOX_KEYS = ("cx", "cy", "cz", "yaw", "l", "w", "h")


class SceneFileError(Exception):
    """Malformed scene file; message carries the offending line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ForecastRecord:
    """One forecasted agent as stored on disk."""

    agent_id: int
    agent_class: AgentClass
    score: float
    frame: int
    current: tuple[float, float]
    forecast: ForecastSet


@dataclass
class SceneBundle:
    """Everything a scene file may hold; sections empty when absent."""

    scene_id: str
    hz: float
    n_frames: int
    extent_m: float = 40.0
    gt_agents: tuple[GtAgent, ...] = ()
    detections: tuple[Detection, ...] = ()
    tracks: tuple[Track, ...] = ()
    forecasts: tuple[ForecastRecord, ...] = ()
    pairs: tuple[TrainingPair, ...] = ()

    def detections_by_frame(self) -> list[list[Detection]]:
        frames: list[list[Detection]] = [[] for _ in range(self.n_frames)]
        for det in self.detections:
            frames[det.frame].append(det)
        return frames


def _reject_constant(name: str) -> float:
    raise ValueError(f"non-finite constant {name}")


def _parse_line(line_no: int, text: str) -> dict[str, Any]:
    try:
        record = json.loads(text, parse_constant=_reject_constant)
    except ValueError as exc:
        raise SceneFileError(line_no, f"invalid JSON ({exc})") from exc
    if not isinstance(record, dict):
        raise SceneFileError(line_no, "record is not a JSON object")
    return record


def _need(record: dict[str, Any], key: str, line_no: int) -> Any:
    if key not in record:
        raise SceneFileError(line_no, f"missing field {key!r}")
    return record[key]


def _num(record: dict[str, Any], key: str, line_no: int) -> float:
    value = _need(record, key, line_no)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneFileError(line_no, f"field {key!r} is not a number")
    value = float(value)
    if not math.isfinite(value):
        raise SceneFileError(line_no, f"field {key!r} is not finite")
    return value


def _int(record: dict[str, Any], key: str, line_no: int) -> int:
    value = _need(record, key, line_no)
    if isinstance(value, bool) or not isinstance(value, int):
        raise SceneFileError(line_no, f"field {key!r} is not an integer")
    return value


def _agent_class(record: dict[str, Any], line_no: int) -> AgentClass:
    name = _need(record, "class", line_no)
    try:
        return AgentClass(name)
    except ValueError as exc:
        raise SceneFileError(line_no, f"unknown agent class {name!r}") from exc


def _box(record: dict[str, Any], line_no: int) -> Box3D:
    vals = {k: _num(record, k, line_no) for k in _BOX_KEYS}
    try:
        return Box3D(
            cx=vals["cx"],
            cy=vals["cy"],
            cz=vals["cz"],
            length=vals["l"],
            width=vals["w"],
            height=vals["h"],
            yaw=vals["yaw"],
        )
    except ValueError as exc:
        raise SceneFileError(line_no, f"invalid box ({exc})") from exc


def _check_frame(frame: int, n_frames: int, line_no: int) -> int:
    if not 0 <= frame < n_frames:
        raise SceneFileError(
            line_no, f"frame {frame} outside declared range [0, {n_frames})"
        )
    return frame


def read_scene_file(path: str | Path) -> SceneBundle:
    """Parse and validate one scene file."""
    lines = Path(path).read_text().splitlines()
    header: dict[str, Any] | None = None
    gt_rows: dict[int, list[tuple[int, int, AgentClass, Box3D]]] = {}
    detections: list[Detection] = []
    track_rows: dict[int, list[tuple[int, int, AgentClass, Box3D, bool, float]]] = {}
    forecasts: list[ForecastRecord] = []
    pairs: list[TrainingPair] = []

    n_frames = 0
    for line_no, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        record = _parse_line(line_no, text)
        kind = _need(record, "kind", line_no)
        if header is None:
            if kind != "header":
                raise SceneFileError(line_no, "first record must be the header")
            header = {
                "scene_id": str(_need(record, "scene_id", line_no)),
                "hz": _num(record, "hz", line_no),
                "frames": _int(record, "frames", line_no),
                "extent": record.get("extent", 40.0),
            }
            if header["hz"] <= 0 or header["frames"] <= 0:
                raise SceneFileError(line_no, "header hz and frames must be positive")
            n_frames = header["frames"]
            continue
        if kind == "header":
            raise SceneFileError(line_no, "duplicate header")
        if kind == "gt":
            frame = _check_frame(_int(record, "frame", line_no), n_frames, line_no)
            gt_rows.setdefault(_int(record, "id", line_no), []).append(
                (line_no, frame, _agent_class(record, line_no), _box(record, line_no))
            )
        elif kind == "det":
            frame = _check_frame(_int(record, "frame", line_no), n_frames, line_no)
            score = _num(record, "score", line_no)
            if not 0.0 <= score <= 1.0:
                raise SceneFileError(line_no, "score outside [0, 1]")
            source = record.get("source_model")
            if source is not None and not isinstance(source, str):
                raise SceneFileError(line_no, "source_model must be a string")
            detections.append(
                Detection(
                    frame=frame,
                    agent_class=_agent_class(record, line_no),
                    box=_box(record, line_no),
                    score=score,
                    source_model=source,
                )
            )
        elif kind == "track":
            frame = _check_frame(_int(record, "frame", line_no), n_frames, line_no)
            observed = _need(record, "observed", line_no)
            if not isinstance(observed, bool):
                raise SceneFileError(line_no, "observed must be a boolean")
            track_rows.setdefault(_int(record, "id", line_no), []).append(
                (
                    line_no,
                    frame,
                    _agent_class(record, line_no),
                    _box(record, line_no),
                    observed,
                    _num(record, "score", line_no),
                )
            )
        elif kind == "forecast":
            forecasts.append(_forecast_from(record, line_no, n_frames))
        elif kind == "pair":
            pairs.append(_pair_from(record, line_no))
        else:
            raise SceneFileError(line_no, f"unknown record kind {kind!r}")

    if header is None:
        raise SceneFileError(1, "missing header")

    gt_agents = tuple(
        _assemble_gt(agent_id, rows) for agent_id, rows in sorted(gt_rows.items())
    )
    tracks = tuple(
        _assemble_track(track_id, rows) for track_id, rows in sorted(track_rows.items())
    )
    return SceneBundle(
        scene_id=header["scene_id"],
        hz=header["hz"],
        n_frames=n_frames,
        extent_m=float(header["extent"]),
        gt_agents=gt_agents,
        detections=tuple(detections),
        tracks=tracks,
        forecasts=tuple(forecasts),
        pairs=tuple(pairs),
    )


def _assemble_gt(
    agent_id: int, rows: list[tuple[int, int, AgentClass, Box3D]]
) -> GtAgent:
    rows = sorted(rows, key=lambda r: r[1])
    classes = {r[2] for r in rows}
    if len(classes) > 1:
        raise SceneFileError(rows[0][0], f"gt id {agent_id} changes class mid-scene")
    frames = [r[1] for r in rows]
    if frames != list(range(frames[0], frames[0] + len(frames))):
        raise SceneFileError(
            rows[0][0], f"gt id {agent_id} has non-contiguous frames"
        )
    return GtAgent(
        agent_id=agent_id,
        agent_class=rows[0][2],
        boxes=tuple((r[1], r[3]) for r in rows),
    )


def _assemble_track(
    track_id: int, rows: list[tuple[int, int, AgentClass, Box3D, bool, float]]
) -> Track:
    rows = sorted(rows, key=lambda r: r[1])
    classes = {r[2] for r in rows}
    if len(classes) > 1:
        raise SceneFileError(rows[0][0], f"track id {track_id} changes class")
    frames = [r[1] for r in rows]
    if frames != list(range(frames[0], frames[0] + len(frames))):
        raise SceneFileError(
            rows[0][0], f"track id {track_id} has non-contiguous frames"
        )
    points = [TrackPoint(frame=r[1], box=r[3], observed=r[4]) for r in rows]
    observed_boxes = [r[3] for r in rows if r[4]]
    anchor = observed_boxes[-1] if observed_boxes else rows[-1][3]
    return Track(
        track_id=track_id,
        agent_class=rows[0][2],
        points=points,
        kalman=kf_init(anchor, KalmanParams()),
        state=TrackState.TERMINATED,
        misses=0,
        score=rows[-1][5],
        n_matches=sum(1 for r in rows if r[4]),
    )


def _xy_list(value: Any, line_no: int, what: str) -> list[tuple[float, float]]:
    if not isinstance(value, list) or not value:
        raise SceneFileError(line_no, f"{what} must be a non-empty list")
    out = []
    for item in value:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in item
            )
            or any(not math.isfinite(float(v)) for v in item)
        ):
            raise SceneFileError(line_no, f"{what} entries must be [x, y] pairs")
        out.append((float(item[0]), float(item[1])))
    return out


def _forecast_from(
    record: dict[str, Any], line_no: int, n_frames: int
) -> ForecastRecord:
    frame = _check_frame(_int(record, "frame", line_no), n_frames, line_no)
    score = _num(record, "score", line_no)
    current = _need(record, "current", line_no)
    cx, cy = _xy_list([current], line_no, "current")[0]
    modes_raw = _need(record, "modes", line_no)
    if not isinstance(modes_raw, list) or not modes_raw:
        raise SceneFileError(line_no, "modes must be a non-empty list")
    modes = []
    for m in modes_raw:
        if not isinstance(m, dict):
            raise SceneFileError(line_no, "each mode must be an object")
        mode_score = _num(m, "score", line_no)
        waypoints = _xy_list(_need(m, "waypoints", line_no), line_no, "waypoints")
        try:
            modes.append(
                ForecastMode(
                    trajectory=FutureTrajectory(waypoints=tuple(waypoints)),
                    score=mode_score,
                )
            )
        except ValueError as exc:
            raise SceneFileError(line_no, f"invalid mode ({exc})") from exc
    try:
        forecast = ForecastSet(modes=tuple(modes))
    except ValueError as exc:
        raise SceneFileError(line_no, f"invalid forecast ({exc})") from exc
    return ForecastRecord(
        agent_id=_int(record, "id", line_no),
        agent_class=_agent_class(record, line_no),
        score=score,
        frame=frame,
        current=(cx, cy),
        forecast=forecast,
    )


def _pair_from(record: dict[str, Any], line_no: int) -> TrainingPair:
    past_raw = _need(record, "past", line_no)
    if not isinstance(past_raw, list) or not past_raw:
        raise SceneFileError(line_no, "past must be a non-empty list")
    samples = []
    for item in past_raw:
        if not isinstance(item, list) or len(item) != 5:
            raise SceneFileError(
                line_no, "past entries must be [frame, x, y, yaw, observed]"
            )
        frame, x, y, yaw, observed = item
        if isinstance(frame, bool) or not isinstance(frame, int):
            raise SceneFileError(line_no, "past frame must be an integer")
        if not isinstance(observed, bool):
            raise SceneFileError(line_no, "past observed must be a boolean")
        if any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in (x, y, yaw)
        ):
            raise SceneFileError(line_no, "past coordinates must be numbers")
        samples.append(
            PastSample(
                frame=frame, x=float(x), y=float(y), yaw=float(yaw), observed=observed
            )
        )
    try:
        past = PastTrajectory(
            agent_id=_int(record, "track_id", line_no),
            agent_class=_agent_class(record, line_no),
            samples=tuple(samples),
            anchor_frame=_int(record, "anchor_frame", line_no),
        )
        future = FutureTrajectory(
            waypoints=tuple(_xy_list(_need(record, "future", line_no), line_no, "future"))
        )
    except ValueError as exc:
        raise SceneFileError(line_no, f"invalid pair ({exc})") from exc
    return TrainingPair(
        predicted_past=past,
        gt_future=future,
        gt_agent_id=_int(record, "gt_id", line_no),
        match_distance=_num(record, "distance", line_no),
    )


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------


def _dump(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def _box_fields(box: Box3D) -> dict[str, float]:
    return {
        "cx": box.cx,
        "cy": box.cy,
        "cz": box.cz,
        "yaw": box.yaw,
        "l": box.length,
        "w": box.width,
        "h": box.height,
    }


def write_scene_file(path: str | Path, bundle: SceneBundle) -> None:
    lines = [
        _dump(
            {
                "kind": "header",
                "scene_id": bundle.scene_id,
                "hz": bundle.hz,
                "frames": bundle.n_frames,
                "extent": bundle.extent_m,
            }
        )
    ]
    for gt in bundle.gt_agents:
        for frame, box in gt.boxes:
            lines.append(
                _dump(
                    {
                        "kind": "gt",
                        "frame": frame,
                        "id": gt.agent_id,
                        "class": gt.agent_class.value,
                        **_box_fields(box),
                    }
                )
            )
    for det in bundle.detections:
        lines.append(
            _dump(
                {
                    "kind": "det",
                    "frame": det.frame,
                    "class": det.agent_class.value,
                    "score": det.score,
                    "source_model": det.source_model,
                    **_box_fields(det.box),
                }
            )
        )
    for track in bundle.tracks:
        for point in track.points:
            lines.append(
                _dump(
                    {
                        "kind": "track",
                        "frame": point.frame,
                        "id": track.track_id,
                        "class": track.agent_class.value,
                        "score": track.score,
                        "observed": point.observed,
                        **_box_fields(point.box),
                    }
                )
            )
    for fc in bundle.forecasts:
        lines.append(
            _dump(
                {
                    "kind": "forecast",
                    "frame": fc.frame,
                    "id": fc.agent_id,
                    "class": fc.agent_class.value,
                    "score": fc.score,
                    "current": list(fc.current),
                    "modes": [
                        {
                            "score": mode.score,
                            "waypoints": [list(w) for w in mode.trajectory.waypoints],
                        }
                        for mode in fc.forecast.modes
                    ],
                }
            )
        )
    for pair in bundle.pairs:
        lines.append(
            _dump(
                {
                    "kind": "pair",
                    "gt_id": pair.gt_agent_id,
                    "track_id": pair.predicted_past.agent_id,
                    "class": pair.predicted_past.agent_class.value,
                    "distance": pair.match_distance,
                    "anchor_frame": pair.predicted_past.anchor_frame,
                    "past": [
                        [s.frame, s.x, s.y, s.yaw, s.observed]
                        for s in pair.predicted_past.samples
                    ],
                    "future": [list(w) for w in pair.gt_future.waypoints],
                }
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_report(path: str | Path, report: dict[str, Any]) -> None:
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def read_report(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text())
