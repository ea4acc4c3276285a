"""End-to-end orchestration: simulate, ensemble, track, forecast, score.

The inference frame is the last one that still leaves a full forecast
horizon inside the scene. Tracking runs from frame 0 through it, pasts
are extracted there, and the forecast is evaluated against the ground
truth of the remaining frames. Tracking metrics are computed over the
tracked window only, so a report never charges the tracker for frames
it was not asked to cover.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, is_dataclass

from . import __version__
from .core import Detection, GtAgent, TimeBase
from .ensemble import EnsembleConfig, merge_frame
from .forecasting import (
    ConstantVelocityForecaster,
    ForecastConfig,
    Forecaster,
    post_process,
)
from .matching import extract_past
from .metrics import (
    ForecastPrediction,
    ForecastScene,
    ForecastTarget,
    MetricConfig,
    aggregate_displacement,
    amota,
    clear_mot,
    hota,
    mapf,
)
from .sceneio import ForecastRecord, SceneBundle
from .simulate import NoiseConfig, Scene, SimConfig, corrupt, gen_scene
from .tracking import Track, Tracker, TrackerConfig

# Seed offset separating the detection streams of ensemble members.
_MODEL_SEED_STRIDE = 1_000_003


@dataclass(frozen=True)
class PipelineConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    n_models: int = 1
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    apply_post_process: bool = True
    interpolate: bool = True

    def __post_init__(self) -> None:
        if self.n_models < 1:
            raise ValueError("n_models must be at least 1")


@dataclass(frozen=True)
class PipelineResult:
    scene: Scene
    detections: list[list[Detection]]
    tracks: list[Track]
    forecast_scene: ForecastScene
    anchor_frame: int
    report: dict


def anchor_frame_for(scene_len: int, time_base: TimeBase) -> int:
    return scene_len - 1 - time_base.horizon_steps


def detection_streams(
    scene: Scene, noise: NoiseConfig, seed: int, n_models: int
) -> list[list[list[Detection]]]:
    return [
        corrupt(
            scene,
            noise,
            seed + _MODEL_SEED_STRIDE * m,
            source_model=f"model-{m}" if n_models > 1 else None,
        )
        for m in range(n_models)
    ]


def merge_streams(
    streams: list[list[list[Detection]]], config: EnsembleConfig
) -> list[list[Detection]]:
    """Fuse per-frame detections across models; a single stream passes
    through untouched."""
    if len(streams) == 1:
        return streams[0]
    merged = []
    for frame_dets in zip(*streams):
        pool = [d for stream_frame in frame_dets for d in stream_frame]
        merged.append(merge_frame(pool, config))
    return merged


def track_frames(
    frames: list[list[Detection]],
    config: TrackerConfig,
    interpolate: bool,
    first_frame: int = 0,
) -> list[Track]:
    tracker = Tracker(config)
    for offset, dets in enumerate(frames):
        tracker.step(first_frame + offset, dets)
    return tracker.finish(interpolate=interpolate)


def forecast_tracks(
    tracks: list[Track],
    anchor_frame: int,
    time_base: TimeBase,
    forecaster: Forecaster,
    apply_post: bool,
) -> list[ForecastRecord]:
    """Forecast every track alive at the anchor frame."""
    records = []
    for track in sorted(tracks, key=lambda t: t.track_id):
        past = extract_past(track, anchor_frame, time_base)
        if past is None:
            continue
        fc = forecaster.forecast(past)
        if apply_post:
            fc = post_process(fc, past, track.agent_class)
        records.append(
            ForecastRecord(
                agent_id=track.track_id,
                agent_class=track.agent_class,
                score=track.score,
                frame=anchor_frame,
                current=(past.current.x, past.current.y),
                forecast=fc,
            )
        )
    return records


def forecast_targets(
    gt_agents: list[GtAgent] | tuple[GtAgent, ...],
    anchor_frame: int,
    time_base: TimeBase,
) -> list[ForecastTarget]:
    """Ground-truth agents with a presence at the anchor and a full
    future horizon after it."""
    from .matching import gt_future

    targets = []
    for gt in gt_agents:
        pos = gt.position_at(anchor_frame)
        future = gt_future(gt, anchor_frame, time_base)
        if pos is None or future is None:
            continue
        prev = gt.position_at(anchor_frame - 1)
        vel = (pos[0] - prev[0], pos[1] - prev[1]) if prev is not None else (0.0, 0.0)
        targets.append(
            ForecastTarget(
                agent_id=gt.agent_id,
                agent_class=gt.agent_class,
                current=pos,
                future=future,
                past_velocity=vel,
            )
        )
    return targets


def forecast_scene_from(
    records: list[ForecastRecord],
    gt_agents: list[GtAgent] | tuple[GtAgent, ...],
    anchor_frame: int,
    time_base: TimeBase,
) -> ForecastScene:
    predictions = tuple(
        ForecastPrediction(
            agent_id=r.agent_id,
            agent_class=r.agent_class,
            score=r.score,
            current=r.current,
            forecast=r.forecast,
        )
        for r in records
    )
    targets = tuple(forecast_targets(gt_agents, anchor_frame, time_base))
    return ForecastScene(predictions=predictions, targets=targets)


def truncate_gts(
    gt_agents: list[GtAgent] | tuple[GtAgent, ...], last_frame: int
) -> list[GtAgent]:
    """Clip ground truth to frames <= last_frame (for tracking metrics
    over the tracked window)."""
    out = []
    for gt in gt_agents:
        if gt.first_frame > last_frame:
            continue
        keep = last_frame - gt.first_frame + 1
        out.append(
            GtAgent(
                agent_id=gt.agent_id,
                agent_class=gt.agent_class,
                boxes=gt.boxes[:keep],
            )
        )
    return out


def _undef(value: float | None) -> float | str:
    return "undefined" if value is None else value


def evaluate_bundle(
    bundle: SceneBundle,
    metric: MetricConfig,
    time_base: TimeBase,
    seed: int | None = None,
    config_echo: dict | None = None,
) -> dict:
    """Score a bundle holding gt plus tracks and/or forecasts."""
    tracks = list(bundle.tracks)
    gts = list(bundle.gt_agents)

    if tracks:
        window_end = max(t.last_frame for t in tracks)
        gts_window = truncate_gts(gts, window_end)
        hota_res = hota(tracks, gts_window, metric)
        mot = clear_mot(tracks, gts_window, metric)
        amota_val = amota(tracks, gts_window, metric)
    else:
        hota_res, mot, amota_val = None, None, None

    if bundle.forecasts:
        anchors = {fc.frame for fc in bundle.forecasts}
        if len(anchors) > 1:
            raise ValueError("forecast records span multiple anchor frames")
        anchor = next(iter(anchors))
        scene = forecast_scene_from(list(bundle.forecasts), gts, anchor, time_base)
        mapf_res = mapf([scene], metric)
        disp = aggregate_displacement([scene], metric)
    else:
        mapf_res, disp = None, None

    report: dict = {
        "tool": {"name": "trackcast", "version": __version__},
        "seed": seed,
        "scene_id": bundle.scene_id,
        "mapf": {
            "overall": _undef(mapf_res.overall) if mapf_res else "undefined",
            "per_type": {
                k: _undef(v) for k, v in (mapf_res.per_type if mapf_res else {}).items()
            },
            "per_class": {
                k: _undef(v)
                for k, v in (mapf_res.per_class if mapf_res else {}).items()
            },
        },
        "ade": _undef(disp[0] if disp else None),
        "fde": _undef(disp[1] if disp else None),
        "hota": _undef(hota_res.hota if hota_res else None),
        "deta": _undef(hota_res.deta if hota_res else None),
        "assa": _undef(hota_res.assa if hota_res else None),
        "mota": _undef(mot.mota if mot else None),
        "mota_raw": _undef(mot.mota_raw if mot else None),
        "amota": _undef(amota_val),
        "counts": {
            "tp": mot.tp if mot else 0,
            "fp": mot.fp if mot else 0,
            "fn": mot.fn if mot else 0,
            "ids": mot.ids if mot else 0,
            "n_gt": mot.n_gt if mot else 0,
        },
    }
    if config_echo is not None:
        report["config"] = config_echo
    return report


def run_pipeline(
    config: PipelineConfig,
    seed: int,
    forecaster: Forecaster | None = None,
) -> PipelineResult:
    scene = gen_scene(config.sim, seed)
    time_base = config.sim.time_base
    anchor = anchor_frame_for(scene.n_frames, time_base)

    streams = detection_streams(scene, config.noise, seed, config.n_models)
    frames = merge_streams(streams, config.ensemble)
    tracks = track_frames(frames[: anchor + 1], config.tracker, config.interpolate)

    forecaster = forecaster or ConstantVelocityForecaster(config.forecast)
    records = forecast_tracks(
        tracks, anchor, time_base, forecaster, config.apply_post_process
    )

    bundle = SceneBundle(
        scene_id=scene.scene_id,
        hz=scene.hz,
        n_frames=scene.n_frames,
        extent_m=scene.extent_m,
        gt_agents=scene.agents,
        tracks=tuple(tracks),
        forecasts=tuple(records),
    )
    report = evaluate_bundle(
        bundle,
        config.metric,
        time_base,
        seed=seed,
        config_echo=config_to_json(config),
    )
    fscene = forecast_scene_from(records, list(scene.agents), anchor, time_base)
    return PipelineResult(
        scene=scene,
        detections=frames,
        tracks=tracks,
        forecast_scene=fscene,
        anchor_frame=anchor,
        report=report,
    )


def pipeline_bundle(result: PipelineResult) -> SceneBundle:
    """Bundle with every artifact the pipeline produced."""
    dets = tuple(d for frame in result.detections for d in frame)
    records = tuple(
        ForecastRecord(
            agent_id=p.agent_id,
            agent_class=p.agent_class,
            score=p.score,
            frame=result.anchor_frame,
            current=p.current,
            forecast=p.forecast,
        )
        for p in result.forecast_scene.predictions
    )
    return SceneBundle(
        scene_id=result.scene.scene_id,
        hz=result.scene.hz,
        n_frames=result.scene.n_frames,
        extent_m=result.scene.extent_m,
        gt_agents=result.scene.agents,
        detections=dets,
        tracks=tuple(result.tracks),
        forecasts=records,
    )


def config_to_json(obj: object) -> object:
    """Dataclasses, enums, and containers to JSON-safe structures."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: config_to_json(v) for k, v in asdict(obj).items()}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {
            (k.value if isinstance(k, enum.Enum) else k): config_to_json(v)
            for k, v in obj.items()
        }
    if isinstance(obj, (list, tuple)):
        return [config_to_json(v) for v in obj]
    return obj
