"""Ordered position pairs extracted from sessions.

A :class:`PairBatch` is columnar: every shown item (one session slot) is
stored once in an item table, and pairs index into it. Scoring a batch then
costs one forward pass per item, not per pair.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import NamedTuple

import numpy as np

from CXq_rank.estimation.bias_params import EstimationError
from CXq_rank.letor.models import Dataset
from CXq_rank.simulation.models import Session


class Bucket(IntEnum):
    BOTH_POSITIVE = 0  # c_i > c_j > 0
    LOWER_ZERO = 1  # c_i > c_j = 0
    NON_POSITIVE = 2  # c_i <= c_j

    @classmethod
    def of(cls, c_i: float, c_j: float) -> Bucket:
        return cls(int(bucket_codes(np.array([c_i]), np.array([c_j]))[0]))


class ObservedEvent(IntEnum):
    """What the E-step conditions on.

    ``POSITIVE`` is the plain event ``c_i > c_j`` under the ``theta_j`` prior.
    ``BOTH_POSITIVE`` additionally fixes ``e_j = 1``; ``LOWER_ZERO`` uses the
    ``theta_minus_j`` prior for the unclicked lower item.
    """

    POSITIVE = 0
    BOTH_POSITIVE = 1
    LOWER_ZERO = 2
    NON_POSITIVE = 3

    @property
    def is_positive(self) -> bool:
        return self != ObservedEvent.NON_POSITIVE


def bucket_codes(c_i: np.ndarray, c_j: np.ndarray) -> np.ndarray:
    codes = np.full(len(c_i), Bucket.NON_POSITIVE, dtype=np.int8)
    above = c_i > c_j
    codes[above & (c_j > 0)] = Bucket.BOTH_POSITIVE
    codes[above & (c_j <= 0)] = Bucket.LOWER_ZERO
    return codes


def event_codes(buckets: np.ndarray, bucketed: bool = True) -> np.ndarray:
    """Map bucket codes to :class:`ObservedEvent` codes.

    With ``bucketed=False`` both positive buckets collapse onto ``POSITIVE``.
    """
    out = np.full(len(buckets), ObservedEvent.NON_POSITIVE, dtype=np.int8)
    if bucketed:
        out[buckets == Bucket.BOTH_POSITIVE] = ObservedEvent.BOTH_POSITIVE
        out[buckets == Bucket.LOWER_ZERO] = ObservedEvent.LOWER_ZERO
    else:
        out[buckets != Bucket.NON_POSITIVE] = ObservedEvent.POSITIVE
    return out


@dataclass(frozen=True, eq=False)
class PairObservation:
    qid: str
    pos_i: int
    pos_j: int
    feat_i: np.ndarray
    feat_j: np.ndarray
    c_i: float
    c_j: float
    bucket: Bucket

    def __post_init__(self) -> None:
        if self.pos_i == self.pos_j:
            raise EstimationError(f"qid {self.qid}: pair at a single position {self.pos_i}")
        if Bucket.of(self.c_i, self.c_j) != self.bucket:
            raise EstimationError(
                f"qid {self.qid}: bucket {self.bucket.name} inconsistent with labels ({self.c_i}, {self.c_j})"
            )


@dataclass(frozen=True)
class _ListIndex:
    """Rows grouped by list: ``order[offsets[k]:offsets[k + 1]]`` belong to list ``k``."""

    order: np.ndarray
    offsets: np.ndarray

    @classmethod
    def build(cls, owner: np.ndarray, n_lists: int) -> _ListIndex:
        counts = np.bincount(owner, minlength=n_lists)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        return cls(np.argsort(owner, kind="stable"), offsets)

    def gather(self, lists: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Rows of ``lists`` in that order, and the row count of each list."""
        sizes = self.offsets[lists + 1] - self.offsets[lists]
        shift = np.repeat(self.offsets[lists] - (np.cumsum(sizes) - sizes), sizes)
        return self.order[shift + np.arange(int(sizes.sum()))], sizes


class _ListLayout(NamedTuple):
    items: _ListIndex
    pairs: _ListIndex
    # rank of each item inside its own list
    within: np.ndarray


@dataclass(frozen=True, eq=False)
class PairBatch:
    """Item table (``features``, ``positions``, ``labels``, ``list_index``) plus pair indices."""

    features: np.ndarray
    positions: np.ndarray
    labels: np.ndarray
    list_index: np.ndarray
    idx_i: np.ndarray
    idx_j: np.ndarray
    list_qids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.positions)
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise EstimationError(f"feature table {self.features.shape} does not match {n} items")
        if len(self.labels) != n or len(self.list_index) != n:
            raise EstimationError("ragged item table")
        if len(self.idx_i) != len(self.idx_j):
            raise EstimationError("ragged pair index")

    @property
    def n_items(self) -> int:
        return len(self.positions)

    @property
    def n_pairs(self) -> int:
        return len(self.idx_i)

    @property
    def n_lists(self) -> int:
        if self.list_qids:
            return len(self.list_qids)
        return int(self.list_index.max()) + 1 if self.n_items else 0

    @property
    def max_position(self) -> int:
        return int(self.positions.max()) if self.n_items else 0

    @property
    def pos_i(self) -> np.ndarray:
        return self.positions[self.idx_i]

    @property
    def pos_j(self) -> np.ndarray:
        return self.positions[self.idx_j]

    @property
    def c_i(self) -> np.ndarray:
        return self.labels[self.idx_i]

    @property
    def c_j(self) -> np.ndarray:
        return self.labels[self.idx_j]

    @property
    def buckets(self) -> np.ndarray:
        return bucket_codes(self.c_i, self.c_j)

    @property
    def pair_lists(self) -> np.ndarray:
        return self.list_index[self.idx_i]

    def events(self, bucketed: bool = True) -> np.ndarray:
        return event_codes(self.buckets, bucketed=bucketed)

    @cached_property
    def _list_layout(self) -> _ListLayout:
        n = max(self.n_lists, 1)
        items = _ListIndex.build(self.list_index, n)
        within = np.empty(self.n_items, dtype=np.int64)
        within[items.order] = np.arange(self.n_items) - items.offsets[self.list_index[items.order]]
        return _ListLayout(items, _ListIndex.build(self.list_index[self.idx_i], n), within)

    def subset(self, lists: np.ndarray) -> PairBatch:
        """Sub-batch of the given list ids, renumbered in the given order."""
        lists = np.asarray(lists, dtype=np.int64)
        layout = self._list_layout
        keep, item_sizes = layout.items.gather(lists)
        pairs, pair_sizes = layout.pairs.gather(lists)
        new_starts = np.cumsum(item_sizes) - item_sizes
        pair_start = np.repeat(new_starts, pair_sizes)
        return PairBatch(
            features=self.features[keep],
            positions=self.positions[keep],
            labels=self.labels[keep],
            list_index=np.repeat(np.arange(len(lists), dtype=np.int64), item_sizes),
            idx_i=pair_start + layout.within[self.idx_i[pairs]],
            idx_j=pair_start + layout.within[self.idx_j[pairs]],
            list_qids=tuple(self.list_qids[k] for k in lists) if self.list_qids else (),
        )

    def positive_only(self) -> PairBatch:
        """Same items, only the pairs with ``c_i > c_j``."""
        keep = self.labels[self.idx_i] > self.labels[self.idx_j]
        return PairBatch(
            features=self.features,
            positions=self.positions,
            labels=self.labels,
            list_index=self.list_index,
            idx_i=self.idx_i[keep],
            idx_j=self.idx_j[keep],
            list_qids=self.list_qids,
        )

    def observation(self, k: int) -> PairObservation:
        a, b = int(self.idx_i[k]), int(self.idx_j[k])
        return PairObservation(
            qid=self.list_qids[int(self.list_index[a])] if self.list_qids else "",
            pos_i=int(self.positions[a]),
            pos_j=int(self.positions[b]),
            feat_i=self.features[a],
            feat_j=self.features[b],
            c_i=float(self.labels[a]),
            c_j=float(self.labels[b]),
            bucket=Bucket(int(self.buckets[k])),
        )

    def observations(self) -> list[PairObservation]:
        return [self.observation(k) for k in range(self.n_pairs)]


def ordered_pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All ``(a, b)``, ``a != b``, of ``range(n)`` in row-major order."""
    a, b = np.nonzero(~np.eye(n, dtype=bool))
    return a, b


def extract_pair_batch(
    sessions: Sequence[Session],
    dataset: Dataset,
    max_position: int | None = None,
) -> PairBatch:
    """Every ordered position pair of every session, with the shown documents' features."""
    feats: list[np.ndarray] = []
    positions: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    lists: list[np.ndarray] = []
    idx_i: list[np.ndarray] = []
    idx_j: list[np.ndarray] = []
    qids: list[str] = []
    offset = 0
    for list_id, session in enumerate(sessions):
        n = session.size
        if max_position is not None and n > max_position:
            raise EstimationError(
                f"session {session.session_id} shows {n} items, more than {max_position} positions"
            )
        feats.append(dataset.query(session.qid).feature_matrix[session.ranked_docs])
        positions.append(np.arange(1, n + 1, dtype=np.int64))
        labels.append(np.asarray(session.synth, dtype=np.float64))
        lists.append(np.full(n, list_id, dtype=np.int64))
        a, b = ordered_pair_index(n)
        idx_i.append(a + offset)
        idx_j.append(b + offset)
        qids.append(session.qid)
        offset += n

    if not sessions:
        empty_i = np.zeros(0, dtype=np.int64)
        return PairBatch(
            features=np.zeros((0, dataset.feature_dim)),
            positions=empty_i,
            labels=np.zeros(0),
            list_index=empty_i,
            idx_i=empty_i,
            idx_j=empty_i,
        )
    return PairBatch(
        features=np.vstack(feats),
        positions=np.concatenate(positions),
        labels=np.concatenate(labels),
        list_index=np.concatenate(lists),
        idx_i=np.concatenate(idx_i),
        idx_j=np.concatenate(idx_j),
        list_qids=tuple(qids),
    )


def extract_pairs(session: Session, dataset: Dataset) -> list[PairObservation]:
    return extract_pair_batch([session], dataset).observations()
