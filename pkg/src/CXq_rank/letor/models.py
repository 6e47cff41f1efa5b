"""In-memory dataset model: documents with graded relevance, grouped by query."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

MAX_GRADE = 4


class LetorError(Exception):
    """Base exception for dataset ingestion failures."""


class LetorParseError(LetorError):
    """A line does not follow the ``<grade> qid:<id> <idx>:<val> ...`` grammar."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class LetorValidationError(LetorError):
    """Well-formed input that violates a dataset invariant."""

    def __init__(self, message: str, line_no: int | None = None) -> None:
        super().__init__(f"line {line_no}: {message}" if line_no is not None else message)
        self.line_no = line_no


class EmptyDatasetError(LetorError):
    """Input contained no documents."""


class SplitError(LetorError):
    """Query split could not be formed."""


class SplitTag(str, Enum):
    TRAIN = "train"
    VALID = "valid"
    TEST = "test"


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Document:
    """One judged document; ``features`` is a read-only float64 vector."""

    features: np.ndarray
    relevance: int
    doc_index: int

    def __post_init__(self) -> None:
        if not 0 <= self.relevance <= MAX_GRADE:
            raise LetorValidationError(f"relevance {self.relevance} outside [0, {MAX_GRADE}]")
        object.__setattr__(self, "features", _frozen(self.features))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Document):
            return NotImplemented
        return (
            self.relevance == other.relevance
            and self.doc_index == other.doc_index
            and np.array_equal(self.features, other.features)
        )

    def __hash__(self) -> int:
        return hash((self.relevance, self.doc_index, self.features.tobytes()))


@dataclass(frozen=True)
class Query:
    qid: str
    documents: tuple[Document, ...]

    def __post_init__(self) -> None:
        if not self.documents:
            raise LetorValidationError(f"query {self.qid} has no documents")

    @property
    def grades(self) -> np.ndarray:
        return np.array([d.relevance for d in self.documents], dtype=np.int64)

    @property
    def feature_matrix(self) -> np.ndarray:
        return np.vstack([d.features for d in self.documents])

    def __len__(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of queries sharing one feature dimensionality."""

    queries: tuple[Query, ...]
    feature_dim: int
    split_tag: SplitTag = SplitTag.TRAIN
    _by_qid: dict[str, Query] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.feature_dim < 1:
            raise LetorValidationError(f"feature_dim must be positive, got {self.feature_dim}")
        by_qid: dict[str, Query] = {}
        for query in self.queries:
            if query.qid in by_qid:
                raise LetorValidationError(f"duplicate qid {query.qid}")
            for doc in query.documents:
                if doc.features.shape != (self.feature_dim,):
                    raise LetorValidationError(
                        f"qid {query.qid} doc {doc.doc_index}: {doc.features.shape[0]} features, "
                        f"expected {self.feature_dim}"
                    )
            by_qid[query.qid] = query
        object.__setattr__(self, "_by_qid", by_qid)

    def query(self, qid: str) -> Query:
        return self._by_qid[qid]

    @property
    def qids(self) -> list[str]:
        return [q.qid for q in self.queries]

    @property
    def n_documents(self) -> int:
        return sum(len(q) for q in self.queries)

    def with_split(self, tag: SplitTag, queries: tuple[Query, ...] | None = None) -> Dataset:
        return Dataset(
            queries=self.queries if queries is None else queries,
            feature_dim=self.feature_dim,
            split_tag=tag,
        )

    def __len__(self) -> int:
        return len(self.queries)
