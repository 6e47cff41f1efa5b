"""Pointwise losses over the item table of a batch."""

from __future__ import annotations

import numpy as np

from CXq_rank.estimation.pairs import PairBatch
from CXq_rank.losses.base import LossError, LossResult
from CXq_rank.model.mlp import ForwardRecord, Ranker, sigmoid


def _finish(
    ranker: Ranker, value: float, record: ForwardRecord, d_scores: np.ndarray, weights: np.ndarray
) -> LossResult:
    if not np.isfinite(value):
        raise LossError("non-finite pointwise loss")
    return LossResult(value=value, grads=ranker.backprop(record, d_scores), weights=weights)


def loss_pointwise_mse(batch: PairBatch, ranker: Ranker) -> LossResult:
    """``sum (s - y)^2`` against the raw labels."""
    record = ranker.forward_batch(batch.features)
    residual = record.scores - batch.labels
    return _finish(ranker, float(np.sum(residual**2)), record, 2.0 * residual, np.ones(batch.n_items))


def loss_pointwise_ce(batch: PairBatch, ranker: Ranker) -> LossResult:
    """Binary cross-entropy of ``sigmoid(s)`` against ``label > 0``."""
    record = ranker.forward_batch(batch.features)
    s = record.scores
    y = (batch.labels > 0).astype(np.float64)
    value = float(np.sum(np.logaddexp(0.0, s) - y * s))
    return _finish(ranker, value, record, sigmoid(s) - y, np.ones(batch.n_items))


def loss_ipw_pointwise(batch: PairBatch, theta: np.ndarray, ranker: Ranker) -> LossResult:
    """Softmax cross-entropy of each clicked item within its list, weighted ``1 / theta_position``.

    Labels must be 0/1 clicks; lists without clicks contribute 0.
    """
    labels = batch.labels
    if not np.all((labels == 0) | (labels == 1)):
        raise LossError("pointwise IPW needs categorical 0/1 labels")
    theta = np.asarray(theta, dtype=np.float64)
    if batch.max_position > len(theta):
        raise LossError(f"items at position {batch.max_position}, propensities for {len(theta)}")

    record = ranker.forward_batch(batch.features)
    s = record.scores
    groups = batch.list_index
    n_lists = batch.n_lists
    # log-sum-exp per list, shifted by the list maximum
    top = np.full(n_lists, -np.inf)
    np.maximum.at(top, groups, s)
    shifted = np.exp(s - top[groups])
    denom = np.bincount(groups, weights=shifted, minlength=n_lists)
    log_z = top + np.log(np.where(denom > 0, denom, 1.0))
    prob = shifted / denom[groups]

    weight = np.where(labels == 1, 1.0 / theta[batch.positions - 1], 0.0)
    value = float(np.sum(weight * (log_z[groups] - s)))
    # d/ds_l of w_k (log Z - s_k) = w_k (p_l - 1{l = k})
    list_weight = np.bincount(groups, weights=weight, minlength=n_lists)
    d_scores = list_weight[groups] * prob - weight
    return _finish(ranker, value, record, d_scores, weight)
