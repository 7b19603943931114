"""Multi-agent trajectory forecasting with directed interaction-graph message passing."""

from .graph_encoder import (
    GraphEncoderConfig,
    GraphEncoding,
    InteractionGraphState,
    MotionGraphEncoder,
)
from .metrics import MetricsReport, ade, best_of_k, fde, normalization_ratio
from .types import (
    ActorType,
    InvalidInputError,
    JointSceneSample,
    PredictionBatch,
    SceneSample,
    SdvPose,
    TrajectoryWindow,
)

__all__ = [
    "ActorType",
    "GraphEncoderConfig",
    "GraphEncoding",
    "InteractionGraphState",
    "InvalidInputError",
    "JointSceneSample",
    "MetricsReport",
    "MotionGraphEncoder",
    "PredictionBatch",
    "SceneSample",
    "SdvPose",
    "TrajectoryWindow",
    "ade",
    "best_of_k",
    "fde",
    "normalization_ratio",
]

__version__ = "0.1.0"
