"""Training objectives: naive, inverse-propensity and trust-bias corrected ranking losses."""

from CXq_rank.losses.base import LossError, LossResult, pairwise_base_loss
from CXq_rank.losses.ndcg_weight import delta_ndcg, delta_ndcg_batch
from CXq_rank.losses.pairwise import (
    loss_bayes_ipw,
    loss_ipw_pairwise,
    loss_naive_pairwise,
    loss_opt,
    weighted_pairwise,
)
from CXq_rank.losses.pointwise import loss_ipw_pointwise, loss_pointwise_ce, loss_pointwise_mse
from CXq_rank.losses.registry import LossContext, LossVariant, NaiveMode, compute_loss, naive_loss

__all__ = [
    "LossContext",
    "LossError",
    "LossResult",
    "LossVariant",
    "NaiveMode",
    "compute_loss",
    "delta_ndcg",
    "delta_ndcg_batch",
    "loss_bayes_ipw",
    "loss_ipw_pairwise",
    "loss_ipw_pointwise",
    "loss_naive_pairwise",
    "loss_opt",
    "loss_pointwise_ce",
    "loss_pointwise_mse",
    "naive_loss",
    "pairwise_base_loss",
    "weighted_pairwise",
]
