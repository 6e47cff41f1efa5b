"""Deterministic train/valid/test partition of queries."""

from __future__ import annotations

import math

import numpy as np

from CXq_rank.letor.models import Dataset, SplitError, SplitTag


def split_queries(
    dataset: Dataset,
    fractions: tuple[float, float, float],
    seed: int,
) -> tuple[Dataset, Dataset, Dataset]:
    """Partition queries into (train, valid, test).

    Valid and test receive ``max(1, round(n * fraction))`` queries each and
    train takes the remainder. Queries keep their original relative order
    inside each split.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise SplitError(f"fractions must be three positive numbers, got {fractions}")
    if not math.isclose(sum(fractions), 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise SplitError(f"fractions must sum to 1, got {sum(fractions)}")
    n = len(dataset)
    if n < 3:
        raise SplitError(f"need at least 3 queries to split, got {n}")

    n_valid = max(1, round(n * fractions[1]))
    n_test = max(1, round(n * fractions[2]))
    n_train = n - n_valid - n_test
    if n_train < 1:
        raise SplitError(f"fractions {fractions} leave no training queries out of {n}")

    order = np.random.default_rng(seed).permutation(n)
    bounds = (n_train, n_train + n_valid)
    parts = (order[: bounds[0]], order[bounds[0] : bounds[1]], order[bounds[1] :])

    tags = (SplitTag.TRAIN, SplitTag.VALID, SplitTag.TEST)
    train, valid, test = (
        dataset.with_split(tag, tuple(dataset.queries[i] for i in np.sort(idx)))
        for tag, idx in zip(tags, parts, strict=True)
    )
    return train, valid, test
