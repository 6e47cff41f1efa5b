"""The pipeline stages: data, simulation, bias estimation, training, evaluation.

Each stage is a pure function of the resolved config and earlier outputs, so
the CLI subcommands can rerun any stage from the artifacts on disk.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from CXq_rank.estimation.bias_params import BiasParams, init_default
from CXq_rank.estimation.em import EmTrace, run_em
from CXq_rank.estimation.pointwise_em import run_pointwise_em
from CXq_rank.evaluation.report import DEFAULT_CUTOFFS, EvalReport
from CXq_rank.evaluation.runner import evaluate
from CXq_rank.letor.models import Dataset, SplitTag
from CXq_rank.letor.normalize import FeatureScaler, fit_minmax
from CXq_rank.letor.parser import read_letor, serialize_letor
from CXq_rank.letor.splits import split_queries
from CXq_rank.letor.synthetic import generate_synthetic
from CXq_rank.losses.registry import LossContext, LossVariant
from CXq_rank.model.mlp import Ranker
from CXq_rank.pipeline.run_config import RunConfig
from CXq_rank.simulation.models import PresentationPolicy, Session
from CXq_rank.simulation.sessions import simulate_dataset
from CXq_rank.training.lists import training_lists
from CXq_rank.training.trainer import TrainResult, train_ranker
from CXq_rank.utils.hashing import sha256_text
from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class Splits:
    train: Dataset
    valid: Dataset
    test: Dataset
    scaler: FeatureScaler | None = None

    @property
    def feature_dim(self) -> int:
        return self.train.feature_dim

    def split_hash(self, tag: SplitTag) -> str:
        dataset = {SplitTag.TRAIN: self.train, SplitTag.VALID: self.valid, SplitTag.TEST: self.test}[tag]
        return sha256_text(serialize_letor(dataset, dim_header=True))


@dataclass(frozen=True)
class EstimationOutput:
    params: BiasParams | None
    trace: EmTrace | None


def _read_files(cfg: RunConfig) -> tuple[Dataset, Dataset, Dataset]:
    data = cfg.data
    assert data.train is not None
    train = read_letor(data.train, split_tag=SplitTag.TRAIN)
    if data.valid is None or data.test is None:
        fractions = (1.0 - data.valid_fraction - data.test_fraction, data.valid_fraction, data.test_fraction)
        return split_queries(train, fractions, seed=cfg.seed)

    valid = read_letor(data.valid, split_tag=SplitTag.VALID)
    test = read_letor(data.test, split_tag=SplitTag.TEST)
    dim = max(train.feature_dim, valid.feature_dim, test.feature_dim)
    # files that never mention the trailing features are re-read at the common width
    if train.feature_dim < dim:
        train = read_letor(data.train, max_feature_hint=dim, split_tag=SplitTag.TRAIN)
    if valid.feature_dim < dim:
        valid = read_letor(data.valid, max_feature_hint=dim, split_tag=SplitTag.VALID)
    if test.feature_dim < dim:
        test = read_letor(data.test, max_feature_hint=dim, split_tag=SplitTag.TEST)
    return train, valid, test


def load_splits(cfg: RunConfig) -> Splits:
    data = cfg.data
    if data.source == "files":
        train, valid, test = _read_files(cfg)
    else:
        full = generate_synthetic(
            n_queries=data.n_queries,
            docs_per_query=data.docs_per_query,
            feature_dim=data.feature_dim,
            seed=cfg.seed,
            noise=data.noise,
        )
        fractions = (1.0 - data.valid_fraction - data.test_fraction, data.valid_fraction, data.test_fraction)
        train, valid, test = split_queries(full, fractions, seed=cfg.seed)

    scaler = None
    if data.normalize:
        scaler = fit_minmax(train)
        train, valid, test = scaler.apply(train), scaler.apply(valid), scaler.apply(test)
    logger.info(
        "splits_loaded",
        source=data.source,
        train=len(train),
        valid=len(valid),
        test=len(test),
        feature_dim=train.feature_dim,
        normalized=data.normalize,
    )
    return Splits(train=train, valid=valid, test=test, scaler=scaler)


def initial_ranker(cfg: RunConfig, feature_dim: int) -> Ranker:
    return Ranker(cfg.model.spec(feature_dim, init_seed=cfg.seed))


def simulate_stage(cfg: RunConfig, splits: Splits) -> list[Session]:
    """Logged sessions over the training queries."""
    sim = cfg.resolved().sim
    scorer = None
    if sim.policy == PresentationPolicy.BY_SCORE:
        scorer = initial_ranker(cfg, splits.feature_dim).score
    return simulate_dataset(splits.train, sim, scorer=scorer)


def estimate_stage(cfg: RunConfig, splits: Splits, sessions: Sequence[Session]) -> EstimationOutput:
    """Bias parameters for debiased variants; nothing for naive ones.

    Pairwise variants run the pairwise regression EM. ``ipw_pointwise`` runs
    the pointwise EM and stores its propensities in ``theta``.
    """
    resolved = cfg.resolved()
    variant = resolved.train.variant
    n_positions = resolved.sim.list_size
    if not variant.debiased:
        return EstimationOutput(params=None, trace=None)

    ranker = initial_ranker(cfg, splits.feature_dim)
    init = init_default(n_positions)
    if variant == LossVariant.IPW_POINTWISE:
        # categorical labels only: click labels or synthesized labels equal to clicks
        batch = training_lists(resolved.train.label_source, splits.train, sessions)
        result = run_pointwise_em(batch, resolved.em, n_positions, ranker)
        params = BiasParams(
            theta=result.theta,
            theta_minus=init.theta_minus,
            eps_plus=init.eps_plus,
            eps_minus=init.eps_minus,
        )
        return EstimationOutput(params=params, trace=None)

    params, _, trace = run_em(sessions, splits.train, resolved.em, init, ranker)
    return EstimationOutput(params=params, trace=trace)


def train_stage(
    cfg: RunConfig,
    splits: Splits,
    sessions: Sequence[Session],
    params: BiasParams | None,
) -> TrainResult:
    resolved = cfg.resolved()
    train_cfg = resolved.train
    batch = training_lists(train_cfg.label_source, splits.train, sessions)
    context = LossContext(
        params=params,
        theta=None if params is None else np.asarray(params.theta),
        ndcg_k=train_cfg.ndcg_k,
        delta_z_order=train_cfg.delta_z_order,
    )
    ranker = initial_ranker(cfg, splits.feature_dim)
    return train_ranker(batch, train_cfg, ranker, context, valid=splits.valid)


def evaluate_stage(ranker: Ranker, splits: Splits, cutoffs: Sequence[int] = DEFAULT_CUTOFFS) -> EvalReport:
    return evaluate(ranker, splits.test, cutoffs=cutoffs)
