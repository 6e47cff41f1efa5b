"""Neural scorer with pairwise-preference (gamma) and pointwise-relevance (beta) heads."""

from CXq_rank.model.checkpoint import (
    CheckpointError,
    CheckpointMeta,
    load_checkpoint,
    save_checkpoint,
)
from CXq_rank.model.mlp import (
    DimensionMismatchError,
    DivergenceError,
    ForwardRecord,
    MlpSpec,
    ModelError,
    Ranker,
    StaleForwardError,
    sigmoid,
)
from CXq_rank.model.optim import clip_by_global_norm, sgd_step

__all__ = [
    "CheckpointError",
    "CheckpointMeta",
    "DimensionMismatchError",
    "DivergenceError",
    "ForwardRecord",
    "MlpSpec",
    "ModelError",
    "Ranker",
    "StaleForwardError",
    "clip_by_global_norm",
    "load_checkpoint",
    "save_checkpoint",
    "sgd_step",
    "sigmoid",
]
