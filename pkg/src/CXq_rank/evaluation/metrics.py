"""Ranking metrics against true graded relevance.

Items are ordered by descending score; ties keep their original index order.
NDCG uses gain ``2**grade - 1`` and discount ``1 / log2(1 + rank)``.
"""

from __future__ import annotations

import numpy as np


class MetricError(Exception):
    """Invalid metric input."""


def _check(scores: np.ndarray, grades: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    grades = np.asarray(grades, dtype=np.float64)
    if scores.ndim != 1 or scores.shape != grades.shape:
        raise MetricError(f"scores {scores.shape} and grades {grades.shape} must be equal-length vectors")
    if len(scores) == 0:
        raise MetricError("empty ranking")
    return scores, grades


def score_order(scores: np.ndarray) -> np.ndarray:
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def dcg_at_k(ordered_grades: np.ndarray, k: int) -> float:
    top = np.asarray(ordered_grades, dtype=np.float64)[:k]
    discounts = 1.0 / np.log2(np.arange(2, len(top) + 2))
    return float(np.sum((2.0**top - 1.0) * discounts))


def ndcg_at_k(scores: np.ndarray, grades: np.ndarray, k: int) -> float | None:
    """NDCG@k, or None when no item is relevant (the query is then skipped)."""
    if k < 1:
        raise MetricError(f"cutoff must be >= 1, got {k}")
    scores, grades = _check(scores, grades)
    ideal = dcg_at_k(np.sort(grades)[::-1], k)
    if ideal <= 0:
        return None
    return dcg_at_k(grades[score_order(scores)], k) / ideal


def arp(scores: np.ndarray, grades: np.ndarray) -> float | None:
    """Mean 1-based rank of the items with grade > 0; None when there are none."""
    scores, grades = _check(scores, grades)
    ranked = grades[score_order(scores)]
    relevant = np.nonzero(ranked > 0)[0]
    if len(relevant) == 0:
        return None
    return float(np.mean(relevant + 1))
