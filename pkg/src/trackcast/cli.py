"""Command-line surface.

Subcommands mirror the pipeline stages (simulate, ensemble, track,
match, forecast, evaluate, pipeline, render). Configuration layers as
defaults < --config JSON file < explicit flags. Exit codes: 0 success,
1 usage error, 2 data error (malformed scene files carry a line-numbered
diagnostic).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields as dc_fields
from pathlib import Path

from .core import AgentClass, TimeBase
from .ensemble import EnsembleConfig, merge_frame
from .forecasting import (
    ConstantVelocityForecaster,
    ForecastConfig,
    OracleForecaster,
)
from .matching import Assignment, DistanceMode, MatchConfig, build_training_pairs
from .metrics import MetricConfig
from .pipeline import (
    PipelineConfig,
    anchor_frame_for,
    detection_streams,
    evaluate_bundle,
    forecast_tracks,
    pipeline_bundle,
    run_pipeline,
    track_frames,
)
from .sceneio import (
    SceneBundle,
    SceneFileError,
    read_scene_file,
    write_report,
    write_scene_file,
)
from .simulate import NoiseConfig, SimConfig, gen_scene
from .render import render_svg
from .tracking import KalmanParams, TrackerConfig


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# Config file handling
# ---------------------------------------------------------------------------


def _class_keyed(raw: dict, what: str) -> dict[AgentClass, float]:
    out = {}
    for name, weight in raw.items():
        try:
            out[AgentClass(name)] = float(weight)
        except ValueError as exc:
            raise _UsageError(f"{what}: unknown agent class {name!r}") from exc
    return out


def _build_section(cls, raw: dict, path: str):
    """Construct a config dataclass from a JSON object, recursing into
    nested config dataclasses and rejecting unknown keys."""
    nested = {
        "time_base": TimeBase,
        "kalman": KalmanParams,
        "sim": SimConfig,
        "noise": NoiseConfig,
        "ensemble": EnsembleConfig,
        "tracker": TrackerConfig,
        "forecast": ForecastConfig,
        "metric": MetricConfig,
    }
    known = {f.name: f for f in dc_fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise _UsageError(f"config: unknown key {path}{key}")
        if key in nested and isinstance(value, dict):
            kwargs[key] = _build_section(nested[key], value, f"{path}{key}.")
        elif key in ("class_mix", "class_radii") and isinstance(value, dict):
            kwargs[key] = _class_keyed(value, f"{path}{key}")
        elif isinstance(value, list):
            kwargs[key] = tuple(
                tuple(v) if isinstance(v, list) else v for v in value
            )
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise _UsageError(f"config: invalid section {path or '<root>'} ({exc})") from exc


def load_pipeline_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise _UsageError(f"cannot read config file: {exc}") from exc
    except ValueError as exc:
        raise _UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise _UsageError("config file must hold a JSON object")
    return _build_section(PipelineConfig, raw, "")


def _replace(obj, **changes):
    from dataclasses import replace

    return replace(obj, **changes)


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_simulate(args: argparse.Namespace) -> int:
    pc = load_pipeline_config(args.config)
    sim = pc.sim
    overrides = {}
    if args.agents is not None:
        overrides["n_agents"] = args.agents
    if args.frames is not None:
        overrides["scene_len"] = args.frames
    if args.extent is not None:
        overrides["extent_m"] = args.extent
    if overrides:
        sim = _replace(sim, **overrides)
    n_models = args.models if args.models is not None else pc.n_models
    scene = gen_scene(sim, args.seed)
    streams = detection_streams(scene, pc.noise, args.seed, n_models)
    dets = tuple(d for stream in streams for frame in stream for d in frame)
    bundle = SceneBundle(
        scene_id=scene.scene_id,
        hz=scene.hz,
        n_frames=scene.n_frames,
        extent_m=scene.extent_m,
        gt_agents=scene.agents,
        detections=dets,
    )
    write_scene_file(args.output, bundle)
    return 0


def _merge_bundles(paths: list[str]) -> SceneBundle:
    bundles = [read_scene_file(p) for p in paths]
    first = bundles[0]
    for other in bundles[1:]:
        if (
            other.scene_id != first.scene_id
            or other.hz != first.hz
            or other.n_frames != first.n_frames
        ):
            raise ValueError("input scene headers disagree")
    dets = tuple(d for b in bundles for d in b.detections)
    return _replace(first, detections=dets)


def _cmd_ensemble(args: argparse.Namespace) -> int:
    pc = load_pipeline_config(args.config)
    bundle = _merge_bundles(args.input)
    merged = [
        merge_frame(frame_dets, pc.ensemble)
        for frame_dets in bundle.detections_by_frame()
    ]
    out = _replace(bundle, detections=tuple(d for f in merged for d in f))
    write_scene_file(args.output, out)
    return 0


def _cmd_track(args: argparse.Namespace) -> int:
    pc = load_pipeline_config(args.config)
    bundle = read_scene_file(args.input)
    tracks = track_frames(
        bundle.detections_by_frame(),
        pc.tracker,
        interpolate=not args.no_interpolate,
    )
    out = _replace(bundle, tracks=tuple(tracks), detections=())
    write_scene_file(args.output, out)
    return 0


def _anchor(args: argparse.Namespace, bundle: SceneBundle, time_base: TimeBase) -> int:
    if args.frame is not None:
        return args.frame
    return anchor_frame_for(bundle.n_frames, time_base)


def _cmd_match(args: argparse.Namespace) -> int:
    pc = load_pipeline_config(args.config)
    bundle = read_scene_file(args.input)
    if not bundle.tracks:
        raise ValueError("match needs track records in the input scene file")
    if not bundle.gt_agents:
        raise ValueError("match needs gt records in the input scene file")
    time_base = pc.sim.time_base
    cfg = MatchConfig(
        assignment=Assignment(args.assignment),
        distance_mode=DistanceMode(args.distance),
        gate=args.gate if args.gate is not None else MatchConfig().gate,
    )
    pairs = build_training_pairs(
        list(bundle.tracks),
        list(bundle.gt_agents),
        cfg,
        time_base,
        frame0=_anchor(args, bundle, time_base),
    )
    out = _replace(bundle, pairs=tuple(pairs), detections=())
    write_scene_file(args.output, out)
    return 0


def _cmd_forecast(args: argparse.Namespace) -> int:
    pc = load_pipeline_config(args.config)
    bundle = read_scene_file(args.input)
    if not bundle.tracks:
        raise ValueError("forecast needs track records in the input scene file")
    time_base = pc.sim.time_base
    anchor = _anchor(args, bundle, time_base)
    if args.oracle:
        if not bundle.gt_agents:
            raise ValueError("--oracle needs gt records in the input scene file")
        forecaster = OracleForecaster(list(bundle.gt_agents), time_base)
    else:
        forecaster = ConstantVelocityForecaster(pc.forecast)
    records = forecast_tracks(
        list(bundle.tracks),
        anchor,
        time_base,
        forecaster,
        apply_post=not args.no_post_process,
    )
    out = _replace(bundle, forecasts=tuple(records), detections=())
    write_scene_file(args.output, out)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    pc = load_pipeline_config(args.config)
    bundle = read_scene_file(args.input)
    report = evaluate_bundle(
        bundle, pc.metric, pc.sim.time_base, seed=args.seed
    )
    write_report(args.output, report)
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    pc = load_pipeline_config(args.config)
    overrides = {}
    if args.models is not None:
        overrides["n_models"] = args.models
    if args.no_post_process:
        overrides["apply_post_process"] = False
    if args.no_interpolate:
        overrides["interpolate"] = False
    if overrides:
        pc = _replace(pc, **overrides)
    result = run_pipeline(pc, args.seed)
    write_report(args.output, result.report)
    if args.artifacts:
        write_scene_file(args.artifacts, pipeline_bundle(result))
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    bundle = read_scene_file(args.input)
    Path(args.output).write_text(render_svg(bundle, frame=args.frame))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="trackcast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser, output_required: bool = True) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", required=output_required)

    p = sub.add_parser("simulate", help="generate a scene with gt and detections")
    common(p)
    p.add_argument("--agents", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--extent", type=float)
    p.add_argument("--models", type=int, help="number of detection streams")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ensemble", help="fuse detections across models")
    common(p)
    p.add_argument("--input", action="append", required=True)
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("track", help="run the tracker over a detection stream")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--no-interpolate", action="store_true")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("match", help="build forecaster training pairs")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--assignment", choices=["one-one", "many-one"], default="many-one")
    p.add_argument("--distance", choices=["t0", "all"], default="all")
    p.add_argument("--gate", type=float)
    p.add_argument("--frame", type=int)
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("forecast", help="forecast tracked agents")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--frame", type=int)
    p.add_argument("--no-post-process", action="store_true")
    p.add_argument("--oracle", action="store_true")
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("evaluate", help="score tracks and forecasts against gt")
    common(p)
    p.add_argument("--input", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline", help="simulate, track, forecast, evaluate")
    common(p)
    p.add_argument("--models", type=int)
    p.add_argument("--no-post-process", action="store_true")
    p.add_argument("--no-interpolate", action="store_true")
    p.add_argument("--artifacts", help="also write the full scene bundle here")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("render", help="render a scene file to SVG")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--frame", type=int)
    p.set_defaults(func=_cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SceneFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
