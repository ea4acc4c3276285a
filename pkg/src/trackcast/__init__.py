"""trackcast: detection ensembling, 3D multi-object tracking, and
constant-velocity multi-modal forecasting with end-to-end metrics."""

__version__ = "0.1.0"

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
    TimeBase,
)
from .ensemble import EnsembleConfig, merge_frame
from .forecasting import (
    ConstantVelocityForecaster,
    ForecastConfig,
    Forecaster,
    OracleForecaster,
    forecast_cv,
    post_process,
)
from .matching import Assignment, DistanceMode, MatchConfig, TrainingPair, match
from .metrics import (
    MetricConfig,
    TrajectoryType,
    amota,
    classify_trajectory,
    clear_mot,
    forecast_ap,
    hota,
    mapf,
    mota,
)
from .pipeline import PipelineConfig, run_pipeline
from .simulate import NoiseConfig, Scene, SimConfig, corrupt, gen_scene
from .tracking import Track, Tracker, TrackerConfig, TrackState

__all__ = [
    "AgentClass",
    "Assignment",
    "Box3D",
    "ConstantVelocityForecaster",
    "Detection",
    "DistanceMode",
    "EnsembleConfig",
    "ForecastConfig",
    "ForecastMode",
    "ForecastSet",
    "Forecaster",
    "FutureTrajectory",
    "GtAgent",
    "MatchConfig",
    "MetricConfig",
    "NoiseConfig",
    "OracleForecaster",
    "PastSample",
    "PastTrajectory",
    "PipelineConfig",
    "Scene",
    "SimConfig",
    "TimeBase",
    "Track",
    "TrackState",
    "Tracker",
    "TrackerConfig",
    "TrainingPair",
    "TrajectoryType",
    "classify_trajectory",
    "amota",
    "clear_mot",
    "corrupt",
    "forecast_ap",
    "forecast_cv",
    "gen_scene",
    "hota",
    "mapf",
    "match",
    "mota",
    "merge_frame",
    "post_process",
    "run_pipeline",
    "__version__",
]
