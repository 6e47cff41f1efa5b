"""Mini-batch regression EM for position and trust-bias parameters.

Per batch: one forward pass, closed-form E-step, position M-step (the batch
sufficient statistics are blended into running ones, or with
``blend_target="parameters"`` the batch estimates into the running
parameters), then one gradient step of the gamma/beta heads on
Bernoulli-sampled targets.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np
import polars as pl
from pydantic import BaseModel, ConfigDict, Field

from CXq_rank.estimation.bias_params import (
    DEFAULT_FLOOR,
    BiasParams,
    EstimationError,
    blend,
)
from CXq_rank.estimation.pairs import PairBatch, extract_pair_batch
from CXq_rank.estimation.posteriors import PairPosteriors, e_step_batch, pair_log_likelihood
from CXq_rank.letor.models import Dataset
from CXq_rank.model.mlp import DivergenceError, ForwardRecord, Ranker, sigmoid
from CXq_rank.model.optim import sgd_step
from CXq_rank.simulation.models import Session
from CXq_rank.storage.tables import read_table, write_table
from CXq_rank.utils.logging import get_logger
from CXq_rank.utils.rng import derive_rng

logger = get_logger(__name__)

TRACE_SCHEMA = {
    "epoch": pl.Int64,
    "batch": pl.Int64,
    "param": pl.Utf8,
    "i": pl.Int64,
    "j": pl.Int64,
    "value": pl.Float64,
}

# trace rows with batch == EPOCH_ROW hold epoch totals
EPOCH_ROW = -1


class EmConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha0: float = Field(default=0.2, gt=0.0, le=1.0, description="Initial blend rate")
    alpha_schedule: Literal["decay", "constant"] = "decay"
    decay_batches: float = Field(default=100.0, gt=0.0, description="T0 in alpha0 / (1 + t / T0)")
    batch_size: int = Field(default=64, ge=1, description="Sessions per mini-batch")
    epochs: int = Field(default=5, ge=0)
    head_lr: float = Field(default=0.05, ge=0.0, description="0 freezes the gamma/beta heads")
    seed: int = 0
    tol: float = Field(default=1e-5, gt=0.0)
    floor: float = Field(default=DEFAULT_FLOOR, gt=0.0, lt=0.25)
    shuffle: bool = True
    bucketed_posteriors: bool = True
    blend_target: Literal["statistics", "parameters"] = Field(
        default="statistics", description="What the alpha blend averages across batches"
    )
    interleaved: bool = False
    interleaved_lr: float = Field(default=0.01, ge=0.0)

    def alpha_at(self, step: int) -> float:
        if self.alpha_schedule == "constant":
            return self.alpha0
        return self.alpha0 / (1.0 + step / self.decay_batches)


@dataclass
class EmTrace:
    """Parameter trajectories and observed-pair log-likelihoods."""

    rows: list[tuple[int, int, str, int, int, float]] = field(default_factory=list)

    def record_params(self, epoch: int, batch: int, params: BiasParams) -> None:
        n = params.n_positions
        for k in range(n):
            self.rows.append((epoch, batch, "theta", k + 1, 0, float(params.theta[k])))
            self.rows.append((epoch, batch, "theta_minus", k + 1, 0, float(params.theta_minus[k])))
        for a in range(n):
            for b in range(n):
                if a != b:
                    self.rows.append((epoch, batch, "eps_plus", a + 1, b + 1, float(params.eps_plus[a, b])))
                    self.rows.append((epoch, batch, "eps_minus", a + 1, b + 1, float(params.eps_minus[a, b])))

    def record_loglik(self, epoch: int, batch: int, value: float) -> None:
        self.rows.append((epoch, batch, "loglik", 0, 0, value))

    @property
    def epoch_logliks(self) -> list[float]:
        return [r[5] for r in self.rows if r[2] == "loglik" and r[1] == EPOCH_ROW]

    def to_frame(self) -> pl.DataFrame:
        if not self.rows:
            return pl.DataFrame(schema=TRACE_SCHEMA)
        columns = list(zip(*self.rows, strict=True))
        return pl.DataFrame(
            {name: list(col) for name, col in zip(TRACE_SCHEMA, columns, strict=True)},
            schema=TRACE_SCHEMA,
        )

    def write(self, path: Path, config_hash: str | None = None) -> Path:
        return write_table(self.to_frame(), path, config_hash=config_hash)

    @classmethod
    def read(cls, path: Path) -> EmTrace:
        df = read_table(path, schema=TRACE_SCHEMA)
        return cls(rows=[tuple(r) for r in df.iter_rows()])  # type: ignore[misc]


class EmResult(NamedTuple):
    params: BiasParams
    ranker: Ranker
    trace: EmTrace


@dataclass(frozen=True)
class PositionStatistics:
    """Expected sufficient statistics of the position M-step.

    Sums over the slots or pairs of one batch. Running estimates blend these
    and form ratios afterwards.
    """

    exam: np.ndarray
    slots: np.ndarray
    zero_exam: np.ndarray
    zero_slots: np.ndarray
    rpos_mass: np.ndarray
    rpos_clicks: np.ndarray
    rneg_mass: np.ndarray
    rneg_clicks: np.ndarray

    @classmethod
    def from_batch(
        cls, batch: PairBatch, posteriors: PairPosteriors, n_positions: int
    ) -> PositionStatistics:
        if batch.n_pairs == 0:
            raise EstimationError("M-step on an empty batch")
        n = n_positions
        if batch.max_position > n:
            raise EstimationError(
                f"batch shows position {batch.max_position}, parameters cover {n}"
            )

        slot_pos = np.concatenate([batch.pos_i, batch.pos_j]) - 1
        slot_exam = np.concatenate([posteriors.p_exam_i, posteriors.p_exam_j])
        slot_zero = np.concatenate([batch.c_i, batch.c_j]) <= 0
        cell = (batch.pos_i - 1) * n + (batch.pos_j - 1)
        positive = (batch.c_i > batch.c_j).astype(np.float64)

        def per_cell(weights: np.ndarray) -> np.ndarray:
            return np.bincount(cell, weights=weights, minlength=n * n).reshape(n, n)

        return cls(
            exam=np.bincount(slot_pos, weights=slot_exam, minlength=n),
            slots=np.bincount(slot_pos, minlength=n).astype(np.float64),
            zero_exam=np.bincount(slot_pos[slot_zero], weights=slot_exam[slot_zero], minlength=n),
            zero_slots=np.bincount(slot_pos[slot_zero], minlength=n).astype(np.float64),
            rpos_mass=per_cell(posteriors.p_ee_rpos),
            rpos_clicks=per_cell(posteriors.p_ee_rpos * positive),
            rneg_mass=per_cell(posteriors.p_ee_rneg),
            rneg_clicks=per_cell(posteriors.p_ee_rneg * positive),
        )

    def blend(self, batch: PositionStatistics, alpha: float) -> PositionStatistics:
        """``s <- (1 - alpha) s + alpha s_batch`` on every statistic."""
        keep = 1.0 - alpha
        return PositionStatistics(
            *(keep * getattr(self, f.name) + alpha * getattr(batch, f.name) for f in fields(self))
        )

    def estimate(self, current: BiasParams) -> BiasParams:
        """Ratio estimates; entries without data keep their ``current`` value."""

        def ratio(num: np.ndarray, den: np.ndarray, fallback: np.ndarray, eps: float) -> np.ndarray:
            filled = den > eps
            return np.where(filled, num / np.where(filled, den, 1.0), fallback)

        return BiasParams(
            theta=ratio(self.exam, self.slots, current.theta, 0.0),
            theta_minus=ratio(self.zero_exam, self.zero_slots, current.theta_minus, 0.0),
            eps_plus=ratio(self.rpos_clicks, self.rpos_mass, current.eps_plus, 1e-12),
            eps_minus=ratio(self.rneg_clicks, self.rneg_mass, current.eps_minus, 1e-12),
        )


def m_step_positions(
    batch: PairBatch,
    posteriors: PairPosteriors,
    params: BiasParams,
    alpha: float,
    floor: float = DEFAULT_FLOOR,
) -> BiasParams:
    """Batch estimates of every position parameter, blended into ``params``.

    Cells without data (no item at a position, no posterior mass at a position
    pair) keep their current value.
    """
    stats = PositionStatistics.from_batch(batch, posteriors, params.n_positions)
    return blend(params, stats.estimate(params), alpha, floor=floor)


def regression_targets(
    posteriors: PairPosteriors, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Bernoulli draws of ``r_i > r_j`` and ``r_i > 0`` from their posteriors."""
    u = rng.random((2, len(posteriors)))
    return (
        (u[0] < posteriors.p_rel_pair).astype(np.float64),
        (u[1] < posteriors.p_rel_i).astype(np.float64),
    )


def regression_gradient(
    batch: PairBatch,
    posteriors: PairPosteriors,
    ranker: Ranker,
    record: ForwardRecord,
    rng: np.random.Generator,
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of gamma and beta against sampled targets, and its gradient."""
    gamma_target, beta_target = regression_targets(posteriors, rng)
    diff = record.scores[batch.idx_i] - record.scores[batch.idx_j]
    beta_logit = record.beta_logits[batch.idx_i]

    loss = np.sum(np.logaddexp(0.0, diff) - gamma_target * diff)
    loss += np.sum(np.logaddexp(0.0, beta_logit) - beta_target * beta_logit)
    n_pairs = batch.n_pairs
    if not np.isfinite(loss):
        raise DivergenceError("non-finite gamma/beta regression loss")

    g_pair = (sigmoid(diff) - gamma_target) / n_pairs
    g_beta = (sigmoid(beta_logit) - beta_target) / n_pairs
    d_scores = np.bincount(batch.idx_i, weights=g_pair, minlength=batch.n_items) - np.bincount(
        batch.idx_j, weights=g_pair, minlength=batch.n_items
    )
    d_beta = np.bincount(batch.idx_i, weights=g_beta, minlength=batch.n_items)
    return float(loss) / n_pairs, ranker.backprop(record, d_scores, d_beta)


def m_step_regression(
    batch: PairBatch,
    posteriors: PairPosteriors,
    ranker: Ranker,
    head_lr: float,
    rng: np.random.Generator,
    record: ForwardRecord | None = None,
) -> Ranker:
    """One SGD step of the gamma/beta heads; ``record`` must come from the current parameters."""
    if record is None:
        record = ranker.forward_batch(batch.features)
    loss, grads = regression_gradient(batch, posteriors, ranker, record, rng)
    logger.debug("em_regression_step", loss=round(loss, 6), pairs=batch.n_pairs)
    return sgd_step(ranker, grads, head_lr)


def _interleaved_step(batch: PairBatch, params: BiasParams, ranker: Ranker, lr: float) -> None:
    # losses depend on this package
    from CXq_rank.losses.pairwise import loss_bayes_ipw

    positives = batch.positive_only()
    if positives.n_pairs == 0:
        return
    result = loss_bayes_ipw(positives, params, ranker)
    sgd_step(ranker, result.grads / max(batch.n_lists, 1), lr)


def run_em_on_batch(
    batch: PairBatch,
    cfg: EmConfig,
    init: BiasParams,
    ranker: Ranker,
) -> EmResult:
    """EM over a prebuilt pair batch; mini-batches are groups of whole lists."""
    trace = EmTrace()
    if cfg.epochs == 0:
        return EmResult(init, ranker, trace)
    if batch.max_position > init.n_positions:
        raise EstimationError(
            f"sessions show position {batch.max_position}, parameters cover {init.n_positions}"
        )

    rng = derive_rng(cfg.seed, "em")
    params = init
    stats: PositionStatistics | None = None
    step = 0
    n_lists = batch.n_lists
    full_batch = cfg.batch_size >= n_lists and not cfg.shuffle
    for epoch in range(cfg.epochs):
        start = params
        order = rng.permutation(n_lists) if cfg.shuffle else np.arange(n_lists)
        epoch_ll = 0.0
        for b, lo in enumerate(range(0, n_lists, cfg.batch_size)):
            sub = batch if full_batch else batch.subset(order[lo : lo + cfg.batch_size])
            if sub.n_pairs == 0:
                continue
            record = ranker.forward_batch(sub.features)
            posteriors = e_step_batch(sub, params, record, bucketed=cfg.bucketed_posteriors)
            ll = pair_log_likelihood(sub, params, record)
            epoch_ll += ll
            trace.record_loglik(epoch, b, ll)

            alpha = cfg.alpha_at(step)
            batch_stats = PositionStatistics.from_batch(sub, posteriors, params.n_positions)
            if cfg.blend_target == "statistics":
                stats = batch_stats if stats is None else stats.blend(batch_stats, alpha)
                params = blend(params, stats.estimate(params), 1.0, floor=cfg.floor)
            else:
                params = blend(params, batch_stats.estimate(params), alpha, floor=cfg.floor)
            if cfg.head_lr > 0:
                m_step_regression(sub, posteriors, ranker, cfg.head_lr, rng, record=record)
            if cfg.interleaved:
                _interleaved_step(sub, params, ranker, cfg.interleaved_lr)
            trace.record_params(epoch, b, params)
            step += 1

        trace.record_loglik(epoch, EPOCH_ROW, epoch_ll)
        change = params.max_abs_diff(start)
        logger.info("em_epoch_done", epoch=epoch, loglik=round(epoch_ll, 6), max_change=change)
        if change < cfg.tol:
            logger.info("em_converged", epoch=epoch, max_change=change)
            break
    return EmResult(params, ranker, trace)


def run_em(
    sessions: Sequence[Session],
    dataset: Dataset,
    cfg: EmConfig,
    init: BiasParams,
    ranker: Ranker,
) -> EmResult:
    """Estimate bias parameters from logged sessions of ``dataset``'s queries."""
    if cfg.epochs == 0:
        return EmResult(init, ranker, EmTrace())
    batch = extract_pair_batch(sessions, dataset, max_position=init.n_positions)
    logger.info(
        "em_started",
        sessions=len(sessions),
        pairs=batch.n_pairs,
        positions=init.n_positions,
        epochs=cfg.epochs,
    )
    return run_em_on_batch(batch, cfg, init, ranker)
