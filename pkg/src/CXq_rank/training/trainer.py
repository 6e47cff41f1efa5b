"""Mini-batch SGD of the final ranker with early stopping on validation NDCG."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from CXq_rank.estimation.pairs import PairBatch
from CXq_rank.evaluation.runner import evaluate
from CXq_rank.letor.models import Dataset
from CXq_rank.losses.registry import LossContext, LossVariant, compute_loss
from CXq_rank.model.mlp import DivergenceError, Ranker
from CXq_rank.model.optim import sgd_step
from CXq_rank.training.lists import LabelSource
from CXq_rank.utils.logging import get_logger
from CXq_rank.utils.rng import derive_rng

logger = get_logger(__name__)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    variant: LossVariant = LossVariant.OPT
    label_source: LabelSource = LabelSource.SYNTHESIZED_CONTINUOUS
    lr: float = Field(default=0.05, ge=0.0)
    batch_size: int = Field(default=32, ge=1, description="Lists per SGD step")
    epochs: int = Field(default=20, ge=0)
    patience: int = Field(default=5, ge=1, description="Evaluation rounds without improvement")
    eval_cutoff: int = Field(default=5, ge=1)
    clip: float | None = Field(default=5.0, ge=0.0)
    ndcg_k: int = Field(default=10, ge=1)
    delta_z_order: Literal["model", "logged"] = "model"
    seed: int = 0


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    valid_ndcg: float | None


@dataclass
class TrainResult:
    ranker: Ranker
    epochs_run: int = 0
    best_valid_ndcg: float | None = None
    history: list[EpochRecord] = field(default_factory=list)


def train_ranker(
    batch: PairBatch,
    cfg: TrainConfig,
    ranker: Ranker,
    context: LossContext,
    valid: Dataset | None = None,
) -> TrainResult:
    """Train in place; the ranker ends at, and the result holds, the best validation checkpoint.

    Gradients are averaged over the lists of each mini-batch.
    """
    result = TrainResult(ranker=ranker.snapshot())
    n_lists = batch.n_lists
    if cfg.epochs == 0 or n_lists == 0:
        return result

    rng = derive_rng(cfg.seed, "train")
    best = -np.inf
    stale = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_lists)
        total = 0.0
        for lo in range(0, n_lists, cfg.batch_size):
            sub = batch.subset(order[lo : lo + cfg.batch_size])
            loss = compute_loss(cfg.variant, sub, ranker, context)
            if not np.all(np.isfinite(loss.grads)):
                raise DivergenceError(f"non-finite gradient in epoch {epoch}")
            sgd_step(ranker, loss.grads / sub.n_lists, cfg.lr, clip=cfg.clip)
            total += loss.value

        valid_ndcg = None
        if valid is not None:
            valid_ndcg = evaluate(ranker, valid, cutoffs=(cfg.eval_cutoff,)).ndcg_at[cfg.eval_cutoff]
        result.history.append(EpochRecord(epoch=epoch, loss=total / n_lists, valid_ndcg=valid_ndcg))
        result.epochs_run = epoch + 1
        logger.info(
            "train_epoch_done",
            epoch=epoch,
            variant=cfg.variant.value,
            loss=round(total / n_lists, 6),
            valid_ndcg=None if valid_ndcg is None else round(valid_ndcg, 5),
        )

        if valid_ndcg is None:
            result.ranker = ranker.snapshot()
            continue
        if valid_ndcg > best:
            best = valid_ndcg
            stale = 0
            result.ranker = ranker.snapshot()
            result.best_valid_ndcg = valid_ndcg
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("early_stop", epoch=epoch, best_valid_ndcg=round(best, 5))
                break
    ranker.set_params(result.ranker.params)
    return result
