"""Experiment configuration, pipeline stages, run directories and run comparison."""

from CXq_rank.pipeline.compare import ComparisonError, compare_runs, comparison_table
from CXq_rank.pipeline.experiment import ExperimentRunner, StageError, run_experiment, run_variants
from CXq_rank.pipeline.run_config import (
    ConfigError,
    DataConfig,
    ModelConfig,
    RunConfig,
    load_run_config,
    write_config_snapshot,
)

__all__ = [
    "ComparisonError",
    "ConfigError",
    "DataConfig",
    "ExperimentRunner",
    "ModelConfig",
    "RunConfig",
    "StageError",
    "compare_runs",
    "comparison_table",
    "load_run_config",
    "run_experiment",
    "run_variants",
    "write_config_snapshot",
]
