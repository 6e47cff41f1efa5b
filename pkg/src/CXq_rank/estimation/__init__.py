"""Bias parameter estimation: position/trust-bias parameters, E-step, regression EM."""

from CXq_rank.estimation.bias_params import (
    BiasParams,
    BiasParamsError,
    EstimationError,
    ZeroProbabilityEventError,
    blend,
    init_default,
    project,
    read_params,
    write_params,
)
from CXq_rank.estimation.pairs import (
    Bucket,
    ObservedEvent,
    PairBatch,
    PairObservation,
    extract_pair_batch,
    extract_pairs,
)
from CXq_rank.estimation.posteriors import PairPosterior, PairPosteriors, e_step, e_step_batch
from CXq_rank.estimation.em import (
    EmConfig,
    EmResult,
    EmTrace,
    PositionStatistics,
    m_step_positions,
    m_step_regression,
    run_em,
    run_em_on_batch,
)
from CXq_rank.estimation.pointwise_em import run_pointwise_em

__all__ = [
    "BiasParams",
    "BiasParamsError",
    "Bucket",
    "EmConfig",
    "EmResult",
    "EmTrace",
    "EstimationError",
    "ObservedEvent",
    "PairBatch",
    "PairObservation",
    "PairPosterior",
    "PairPosteriors",
    "PositionStatistics",
    "ZeroProbabilityEventError",
    "blend",
    "e_step",
    "e_step_batch",
    "extract_pair_batch",
    "extract_pairs",
    "init_default",
    "m_step_positions",
    "m_step_regression",
    "project",
    "read_params",
    "run_em",
    "run_em_on_batch",
    "run_pointwise_em",
    "write_params",
]
