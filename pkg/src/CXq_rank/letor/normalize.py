"""Per-feature min-max normalization fitted on the training split."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel

from CXq_rank.letor.models import Dataset, Document, Query


class FeatureScaler(BaseModel):
    """Min-max statistics; serializable so they can travel with a checkpoint."""

    minimum: list[float]
    maximum: list[float]

    @classmethod
    def fit(cls, train: Dataset) -> FeatureScaler:
        matrix = np.vstack([q.feature_matrix for q in train.queries])
        return cls(minimum=matrix.min(axis=0).tolist(), maximum=matrix.max(axis=0).tolist())

    def transform(self, features: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.minimum)
        span = np.asarray(self.maximum) - lo
        # constant columns map to 0
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (features - lo) / safe, 0.0)

    def apply(self, dataset: Dataset) -> Dataset:
        queries = tuple(
            Query(
                qid=q.qid,
                documents=tuple(
                    Document(
                        features=self.transform(d.features),
                        relevance=d.relevance,
                        doc_index=d.doc_index,
                    )
                    for d in q.documents
                ),
            )
            for q in dataset.queries
        )
        return Dataset(queries=queries, feature_dim=dataset.feature_dim, split_tag=dataset.split_tag)


def fit_minmax(train: Dataset) -> FeatureScaler:
    return FeatureScaler.fit(train)
