"""Final-ranker training on logged or true labels."""

from CXq_rank.training.lists import LabelSource, relevance_lists, training_lists
from CXq_rank.training.trainer import EpochRecord, TrainConfig, TrainResult, train_ranker

__all__ = [
    "EpochRecord",
    "LabelSource",
    "TrainConfig",
    "TrainResult",
    "relevance_lists",
    "train_ranker",
    "training_lists",
]
