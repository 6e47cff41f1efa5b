"""Shared loss types and the logistic pairwise base loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from CXq_rank.model.mlp import sigmoid


class LossError(Exception):
    """Base exception for invalid loss inputs."""


@dataclass(frozen=True)
class LossResult:
    """Summed loss, its flat parameter gradient, and the per-term weights used."""

    value: float
    grads: np.ndarray
    weights: np.ndarray


def pairwise_base_loss(
    score_i: np.ndarray | float, score_j: np.ndarray | float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``log(1 + exp(-(s_i - s_j)))`` for a pair with ``i`` preferred, with both partials."""
    diff = np.asarray(score_i, dtype=np.float64) - np.asarray(score_j, dtype=np.float64)
    loss = np.logaddexp(0.0, -diff)
    d_i = -sigmoid(-diff)
    return loss, d_i, -d_i
