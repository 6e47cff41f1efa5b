"""Loss variants by name."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from CXq_rank.estimation.bias_params import BiasParams
from CXq_rank.estimation.pairs import PairBatch
from CXq_rank.losses.base import LossError, LossResult
from CXq_rank.losses.ndcg_weight import DeltaZOrder
from CXq_rank.losses.pairwise import (
    loss_bayes_ipw,
    loss_ipw_pairwise,
    loss_naive_pairwise,
    loss_opt,
)
from CXq_rank.losses.pointwise import loss_ipw_pointwise, loss_pointwise_ce, loss_pointwise_mse
from CXq_rank.model.mlp import Ranker


class LossVariant(str, Enum):
    NAIVE_POINTWISE = "naive_pointwise"
    NAIVE_PAIRWISE = "naive_pairwise"
    IPW_POINTWISE = "ipw_pointwise"
    IPW_PAIRWISE = "ipw_pairwise"
    BAYES_IPW = "bayes_ipw"
    OPT = "opt"

    @property
    def pairwise(self) -> bool:
        return self not in (LossVariant.NAIVE_POINTWISE, LossVariant.IPW_POINTWISE)

    @property
    def debiased(self) -> bool:
        return self not in (LossVariant.NAIVE_POINTWISE, LossVariant.NAIVE_PAIRWISE)


class NaiveMode(str, Enum):
    POINTWISE_MSE = "pointwise_mse"
    POINTWISE_CE = "pointwise_ce"
    PAIRWISE = "pairwise"


@dataclass(frozen=True)
class LossContext:
    """Everything besides the batch that a variant may need."""

    params: BiasParams | None = None
    theta: np.ndarray | None = None
    ndcg_k: int = 10
    delta_z_order: DeltaZOrder = "model"


def naive_loss(mode: NaiveMode | str, batch: PairBatch, ranker: Ranker) -> LossResult:
    mode = NaiveMode(mode)
    if mode == NaiveMode.POINTWISE_MSE:
        return loss_pointwise_mse(batch, ranker)
    if mode == NaiveMode.POINTWISE_CE:
        return loss_pointwise_ce(batch, ranker)
    return loss_naive_pairwise(batch.positive_only(), ranker)


def compute_loss(
    variant: LossVariant | str,
    batch: PairBatch,
    ranker: Ranker,
    context: LossContext,
) -> LossResult:
    """Evaluate ``variant`` on ``batch``; pairwise variants use its positive pairs."""
    variant = LossVariant(variant)
    if variant == LossVariant.NAIVE_POINTWISE:
        return naive_loss(NaiveMode.POINTWISE_MSE, batch, ranker)
    if variant == LossVariant.NAIVE_PAIRWISE:
        return naive_loss(NaiveMode.PAIRWISE, batch, ranker)
    if variant == LossVariant.IPW_POINTWISE:
        if context.theta is None:
            raise LossError("ipw_pointwise needs position propensities")
        return loss_ipw_pointwise(batch, context.theta, ranker)

    if context.params is None:
        raise LossError(f"{variant.value} needs bias parameters")
    pairs = batch.positive_only()
    if variant == LossVariant.IPW_PAIRWISE:
        return loss_ipw_pairwise(pairs, context.params, ranker)
    if variant == LossVariant.BAYES_IPW:
        return loss_bayes_ipw(pairs, context.params, ranker)
    return loss_opt(pairs, context.params, ranker, k=context.ndcg_k, order=context.delta_z_order)
