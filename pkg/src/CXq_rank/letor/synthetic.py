"""Synthetic graded-relevance datasets for desk-scale experiments."""

from __future__ import annotations

import numpy as np

from CXq_rank.letor.models import MAX_GRADE, Dataset, Document, Query, SplitTag


def generate_synthetic(
    n_queries: int,
    docs_per_query: int,
    feature_dim: int,
    seed: int,
    noise: float = 0.3,
    split_tag: SplitTag = SplitTag.TRAIN,
    qid_offset: int = 0,
) -> Dataset:
    """Gaussian features with grades quantized from a hidden nonlinear utility.

    The utility mixes a linear term with a pairwise interaction so a
    multilayer scorer has something to learn beyond a linear model. Grades are
    assigned by global quantiles of the noisy utility, giving a skewed grade
    distribution (most documents irrelevant) like the public benchmarks.
    The hidden weights depend only on ``(seed, feature_dim)``; ``qid_offset``
    keeps qids unique when several splits are drawn from the same task.
    """
    task_rng = np.random.default_rng([seed, feature_dim])
    w = task_rng.normal(size=feature_dim)
    v = task_rng.normal(size=feature_dim) / np.sqrt(feature_dim)

    rng = np.random.default_rng([seed, feature_dim, qid_offset, n_queries])
    x = rng.normal(size=(n_queries, docs_per_query, feature_dim))
    utility = x @ w / np.sqrt(feature_dim) + 0.5 * np.tanh(x @ v) ** 2
    utility = utility + noise * rng.normal(size=utility.shape)

    # fixed cut points of the standardized utility: roughly 45/25/15/10/5 %
    z = (utility - utility.mean()) / (utility.std() + 1e-12)
    cuts = np.array([-0.126, 0.524, 1.036, 1.645])
    grades = np.searchsorted(cuts, z, side="right").clip(0, MAX_GRADE)

    queries = tuple(
        Query(
            qid=str(qid_offset + qi + 1),
            documents=tuple(
                Document(features=x[qi, di], relevance=int(grades[qi, di]), doc_index=di)
                for di in range(docs_per_query)
            ),
        )
        for qi in range(n_queries)
    )
    return Dataset(queries=queries, feature_dim=feature_dim, split_tag=split_tag)
