"""Plain SGD with optional global-norm clipping."""

from __future__ import annotations

import numpy as np

from CXq_rank.model.mlp import DivergenceError, ModelError, Ranker


def clip_by_global_norm(grads: np.ndarray, max_norm: float) -> np.ndarray:
    """Rescale so the L2 norm is at most ``max_norm``."""
    if max_norm < 0:
        raise ModelError(f"clip norm must be >= 0, got {max_norm}")
    norm = float(np.linalg.norm(grads))
    if norm <= max_norm:
        return grads
    if max_norm == 0.0:
        return np.zeros_like(grads)
    return grads * (max_norm / norm)


def sgd_step(
    ranker: Ranker,
    grads: np.ndarray,
    lr: float,
    clip: float | None = None,
) -> Ranker:
    """``params -= lr * grads`` in place, after optional clipping; returns ``ranker``."""
    if lr < 0:
        raise ModelError(f"learning rate must be >= 0, got {lr}")
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != ranker.params.shape:
        raise ModelError(f"gradient shape {grads.shape} != parameter shape {ranker.params.shape}")
    if not np.all(np.isfinite(grads)):
        raise DivergenceError("non-finite gradient")
    if clip is not None:
        grads = clip_by_global_norm(grads, clip)
    ranker.apply_update(-lr * grads)
    return ranker
