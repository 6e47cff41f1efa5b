"""|delta NDCG| of swapping two items, on synthesized labels with linear gain."""

from __future__ import annotations

from typing import Literal

import numpy as np

from CXq_rank.estimation.pairs import PairBatch
from CXq_rank.losses.base import LossError

DeltaZOrder = Literal["model", "logged"]


def discount(ranks: np.ndarray, k: int) -> np.ndarray:
    ranks = np.asarray(ranks, dtype=np.float64)
    return np.where(ranks <= k, 1.0 / np.log2(1.0 + ranks), 0.0)


def ideal_dcg(labels: np.ndarray, k: int) -> float:
    ordered = np.sort(np.asarray(labels, dtype=np.float64))[::-1]
    return float(np.sum(ordered * discount(np.arange(1, len(ordered) + 1), k)))


def ranks_by_score(scores: np.ndarray) -> np.ndarray:
    """1-based rank of each item, highest score first, ties by index."""
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    ranks = np.empty(len(order), dtype=np.int64)
    ranks[order] = np.arange(1, len(order) + 1)
    return ranks


def delta_ndcg(
    session_scores: np.ndarray,
    session_labels: np.ndarray,
    i: int,
    j: int,
    k: int = 10,
    ranks: np.ndarray | None = None,
) -> float:
    """``|c_i - c_j| |d(rank_i) - d(rank_j)| / IDCG@k``; 0 when IDCG is 0.

    ``ranks`` overrides the score order (e.g. with logged positions).
    """
    if k < 1:
        raise LossError(f"cutoff must be >= 1, got {k}")
    labels = np.asarray(session_labels, dtype=np.float64)
    if ranks is None:
        ranks = ranks_by_score(session_scores)
    idcg = ideal_dcg(labels, k)
    if idcg <= 0:
        return 0.0
    d = discount(np.array([ranks[i], ranks[j]]), k)
    return float(abs(labels[i] - labels[j]) * abs(d[0] - d[1]) / idcg)


def delta_ndcg_batch(
    batch: PairBatch,
    scores: np.ndarray,
    k: int = 10,
    order: DeltaZOrder = "model",
) -> np.ndarray:
    """:func:`delta_ndcg` for every pair of ``batch``, each list ranked on its own."""
    if k < 1:
        raise LossError(f"cutoff must be >= 1, got {k}")
    n = batch.n_items
    item = np.arange(n)
    if order == "logged":
        ranks = batch.positions.astype(np.float64)
    else:
        by_score = np.lexsort((item, -np.asarray(scores), batch.list_index))
        ranks = np.empty(n)
        ranks[by_score] = _rank_within_groups(batch.list_index[by_score])

    by_label = np.lexsort((item, -batch.labels, batch.list_index))
    ideal_rank = _rank_within_groups(batch.list_index[by_label])
    gains = batch.labels[by_label] * discount(ideal_rank, k)
    idcg = np.bincount(batch.list_index[by_label], weights=gains, minlength=batch.n_lists)

    a, b = batch.idx_i, batch.idx_j
    list_idcg = idcg[batch.list_index[a]]
    num = np.abs(batch.labels[a] - batch.labels[b]) * np.abs(
        discount(ranks[a], k) - discount(ranks[b], k)
    )
    return np.divide(num, list_idcg, out=np.zeros(len(a)), where=list_idcg > 0)


def _rank_within_groups(groups_sorted: np.ndarray) -> np.ndarray:
    """1-based running count inside runs of equal group ids."""
    n = len(groups_sorted)
    if n == 0:
        return np.zeros(0)
    starts = np.r_[True, groups_sorted[1:] != groups_sorted[:-1]]
    start_index = np.maximum.accumulate(np.where(starts, np.arange(n), 0))
    return (np.arange(n) - start_index + 1).astype(np.float64)
