"""Weighted logistic pairwise losses over the positive pairs of a batch.

Every variant is ``sum_k w_k * log(1 + exp(-(s_i - s_j)))`` with the weights
computed once from the current scorer and held fixed for the gradient.
"""

from __future__ import annotations

import numpy as np

from CXq_rank.estimation.bias_params import BiasParams
from CXq_rank.estimation.pairs import PairBatch
from CXq_rank.losses.base import LossError, LossResult, pairwise_base_loss
from CXq_rank.losses.ndcg_weight import DeltaZOrder, delta_ndcg_batch
from CXq_rank.losses.weights import bayes_ipw_weights, ipw_weights, require_positive_pairs
from CXq_rank.model.mlp import ForwardRecord, Ranker, sigmoid


def weighted_pairwise(
    ranker: Ranker,
    batch: PairBatch,
    weights: np.ndarray,
    record: ForwardRecord | None = None,
) -> LossResult:
    """Value and gradient of the weighted base loss at the ranker's current parameters."""
    if record is None:
        record = ranker.forward_batch(batch.features)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (batch.n_pairs,):
        raise LossError(f"{len(weights)} weights for {batch.n_pairs} pairs")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise LossError("pair weights must be finite and nonnegative")

    loss, d_i, _ = pairwise_base_loss(record.scores[batch.idx_i], record.scores[batch.idx_j])
    value = float(np.sum(weights * loss))
    if not np.isfinite(value):
        raise LossError("non-finite pairwise loss")
    g = weights * d_i
    d_scores = np.bincount(batch.idx_i, weights=g, minlength=batch.n_items) - np.bincount(
        batch.idx_j, weights=g, minlength=batch.n_items
    )
    return LossResult(value=value, grads=ranker.backprop(record, d_scores), weights=weights)


def _relevance(batch: PairBatch, record: ForwardRecord) -> tuple[np.ndarray, np.ndarray]:
    gamma = sigmoid(record.scores[batch.idx_i] - record.scores[batch.idx_j])
    return gamma, record.beta[batch.idx_i]


def loss_naive_pairwise(batch: PairBatch, ranker: Ranker) -> LossResult:
    require_positive_pairs(batch)
    return weighted_pairwise(ranker, batch, np.ones(batch.n_pairs))


def loss_ipw_pairwise(batch: PairBatch, params: BiasParams, ranker: Ranker) -> LossResult:
    record = ranker.forward_batch(batch.features)
    weights = ipw_weights(batch, params, *_relevance(batch, record))
    return weighted_pairwise(ranker, batch, weights, record)


def loss_bayes_ipw(batch: PairBatch, params: BiasParams, ranker: Ranker) -> LossResult:
    record = ranker.forward_batch(batch.features)
    weights = bayes_ipw_weights(batch, params, *_relevance(batch, record))
    return weighted_pairwise(ranker, batch, weights, record)


def loss_opt(
    batch: PairBatch,
    params: BiasParams,
    ranker: Ranker,
    k: int = 10,
    order: DeltaZOrder = "model",
) -> LossResult:
    """Bayes-IPW with every pair further weighted by its |delta NDCG@k|."""
    record = ranker.forward_batch(batch.features)
    weights = bayes_ipw_weights(batch, params, *_relevance(batch, record))
    weights = weights * delta_ndcg_batch(batch, record.scores, k=k, order=order)
    return weighted_pairwise(ranker, batch, weights, record)
