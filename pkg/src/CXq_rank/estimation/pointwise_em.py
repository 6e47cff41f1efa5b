"""Pointwise regression EM: the position-based-model propensity estimator.

Each shown item is clicked iff examined and relevant. An unclicked item at
position k with relevance prior ``beta`` has posteriors
``P(e = 1 | c = 0) = theta_k (1 - beta) / (1 - theta_k beta)`` and
``P(r = 1 | c = 0) = (1 - theta_k) beta / (1 - theta_k beta)``; clicked items
are examined and relevant. Only ``theta`` is estimated, which is what the
pointwise IPW loss consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from CXq_rank.estimation.bias_params import EstimationError
from CXq_rank.estimation.em import EmConfig
from CXq_rank.estimation.pairs import PairBatch
from CXq_rank.model.mlp import DivergenceError, Ranker, sigmoid
from CXq_rank.model.optim import sgd_step
from CXq_rank.utils.logging import get_logger
from CXq_rank.utils.rng import derive_rng

logger = get_logger(__name__)


@dataclass
class PointwiseEmResult:
    theta: np.ndarray
    ranker: Ranker
    logliks: list[float] = field(default_factory=list)


def item_posteriors(
    clicked: np.ndarray, theta: np.ndarray, beta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-item ``P(e = 1 | c)`` and ``P(r = 1 | c)``."""
    denom = 1.0 - theta * beta
    exam = np.where(clicked, 1.0, theta * (1.0 - beta) / denom)
    rel = np.where(clicked, 1.0, (1.0 - theta) * beta / denom)
    return exam, rel


def item_log_likelihood(clicked: np.ndarray, theta: np.ndarray, beta: np.ndarray) -> float:
    p = theta * beta
    return float(np.sum(np.where(clicked, np.log(p), np.log1p(-p))))


def run_pointwise_em(
    batch: PairBatch,
    cfg: EmConfig,
    n_positions: int,
    ranker: Ranker,
    init_theta: np.ndarray | None = None,
) -> PointwiseEmResult:
    """Estimate per-position examination from click labels (``label > 0``)."""
    if batch.max_position > n_positions:
        raise EstimationError(f"items at position {batch.max_position}, only {n_positions} estimated")
    theta = (
        1.0 / np.arange(1, n_positions + 1, dtype=np.float64)
        if init_theta is None
        else np.asarray(init_theta, dtype=np.float64).copy()
    )
    theta = np.clip(theta, cfg.floor, 1.0 - cfg.floor)
    result = PointwiseEmResult(theta=theta, ranker=ranker)
    if cfg.epochs == 0 or batch.n_items == 0:
        return result

    rng = derive_rng(cfg.seed, "pointwise_em")
    n_lists = batch.n_lists
    step = 0
    for epoch in range(cfg.epochs):
        start = theta.copy()
        order = rng.permutation(n_lists) if cfg.shuffle else np.arange(n_lists)
        epoch_ll = 0.0
        for lo in range(0, n_lists, cfg.batch_size):
            sub = batch.subset(order[lo : lo + cfg.batch_size])
            if sub.n_items == 0:
                continue
            record = ranker.forward_batch(sub.features)
            clicked = sub.labels > 0
            pos = sub.positions - 1
            beta = record.beta
            epoch_ll += item_log_likelihood(clicked, theta[pos], beta)
            exam, rel = item_posteriors(clicked, theta[pos], beta)

            count = np.bincount(pos, minlength=n_positions)
            total = np.bincount(pos, weights=exam, minlength=n_positions)
            estimate = np.where(count > 0, total / np.maximum(count, 1), theta)
            alpha = cfg.alpha_at(step)
            theta = np.clip((1.0 - alpha) * theta + alpha * estimate, cfg.floor, 1.0 - cfg.floor)

            if cfg.head_lr > 0:
                target = (rng.random(sub.n_items) < rel).astype(np.float64)
                g_beta = (sigmoid(record.beta_logits) - target) / sub.n_items
                if not np.all(np.isfinite(g_beta)):
                    raise DivergenceError("non-finite relevance regression gradient")
                grads = ranker.backprop(record, np.zeros(sub.n_items), g_beta)
                sgd_step(ranker, grads, cfg.head_lr)
            step += 1

        result.logliks.append(epoch_ll)
        change = float(np.max(np.abs(theta - start)))
        logger.info("pointwise_em_epoch_done", epoch=epoch, loglik=round(epoch_ll, 6), max_change=change)
        if change < cfg.tol:
            break
    result.theta = theta
    return result
