"""Training lists: which items are grouped together and which label each carries."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import replace
from enum import Enum

import numpy as np

from CXq_rank.estimation.pairs import PairBatch, extract_pair_batch, ordered_pair_index
from CXq_rank.letor.models import Dataset
from CXq_rank.simulation.models import Session


class LabelSource(str, Enum):
    RELEVANCE_UPPER_BOUND = "relevance_upper_bound"
    CLICK_CATEGORICAL = "click_categorical"
    SYNTHESIZED_CONTINUOUS = "synthesized_continuous"


def relevance_lists(dataset: Dataset) -> PairBatch:
    """One list per query holding all its documents, labelled with their true grades."""
    feats, positions, labels, lists, idx_i, idx_j = [], [], [], [], [], []
    offset = 0
    for list_id, query in enumerate(dataset.queries):
        n = len(query)
        feats.append(query.feature_matrix)
        positions.append(np.arange(1, n + 1, dtype=np.int64))
        labels.append(query.grades.astype(np.float64))
        lists.append(np.full(n, list_id, dtype=np.int64))
        a, b = ordered_pair_index(n)
        idx_i.append(a + offset)
        idx_j.append(b + offset)
        offset += n
    return PairBatch(
        features=np.vstack(feats),
        positions=np.concatenate(positions),
        labels=np.concatenate(labels),
        list_index=np.concatenate(lists),
        idx_i=np.concatenate(idx_i),
        idx_j=np.concatenate(idx_j),
        list_qids=tuple(dataset.qids),
    )


def training_lists(
    source: LabelSource,
    dataset: Dataset,
    sessions: Sequence[Session] = (),
) -> PairBatch:
    """Build the list batch for ``source``: true grades, click labels or synthesized labels."""
    if source == LabelSource.RELEVANCE_UPPER_BOUND:
        return relevance_lists(dataset)
    batch = extract_pair_batch(sessions, dataset)
    if source == LabelSource.CLICK_CATEGORICAL:
        clicks = np.concatenate([s.clicks for s in sessions]).astype(np.float64) if sessions else batch.labels
        return replace(batch, labels=clicks)
    return batch
