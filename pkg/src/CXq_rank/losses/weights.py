"""Per-pair debiasing weights. All are constants with respect to the scorer."""

from __future__ import annotations

import numpy as np

from CXq_rank.estimation.bias_params import BiasParams
from CXq_rank.estimation.pairs import Bucket, PairBatch
from CXq_rank.estimation.posteriors import (
    gather_params,
    lower_exam_posterior,
    pbm_lower_exam_posterior,
    trust_posterior,
)
from CXq_rank.losses.base import LossError


def require_positive_pairs(batch: PairBatch) -> np.ndarray:
    """Bucket codes of ``batch``; every pair must have ``c_i > c_j``."""
    buckets = batch.buckets
    if np.any(buckets == Bucket.NON_POSITIVE):
        k = int(np.nonzero(buckets == Bucket.NON_POSITIVE)[0][0])
        raise LossError(
            f"pair {k} at positions ({batch.pos_i[k]}, {batch.pos_j[k]}) is not a positive pair"
        )
    return buckets


def ipw_weights(batch: PairBatch, params: BiasParams, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``1 / (theta_i theta_j)``, times the trust-free ``h_ij`` on lower-zero pairs."""
    buckets = require_positive_pairs(batch)
    ti, tj, tjm, _, _ = gather_params(params, batch.pos_i, batch.pos_j)
    weight = 1.0 / (ti * tj)
    lower = buckets == Bucket.LOWER_ZERO
    return np.where(lower, weight * pbm_lower_exam_posterior(ti, tjm, gamma, beta), weight)


def bayes_ipw_weights(
    batch: PairBatch, params: BiasParams, gamma: np.ndarray, beta: np.ndarray
) -> np.ndarray:
    """``m_ij / (theta_i theta_j)``, times ``h_ij`` on lower-zero pairs."""
    buckets = require_positive_pairs(batch)
    ti, tj, tjm, ep, em = gather_params(params, batch.pos_i, batch.pos_j)
    weight = trust_posterior(ep, em, gamma) / (ti * tj)
    lower = buckets == Bucket.LOWER_ZERO
    return np.where(lower, weight * lower_exam_posterior(ti, tjm, ep, em, gamma, beta), weight)
