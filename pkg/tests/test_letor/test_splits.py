"""Tests for query splitting, normalization and the synthetic generator."""

from __future__ import annotations

import numpy as np
import pytest

from CXq_rank.letor.models import MAX_GRADE, Dataset, SplitError, SplitTag
from CXq_rank.letor.normalize import FeatureScaler, fit_minmax
from CXq_rank.letor.splits import split_queries
from CXq_rank.letor.synthetic import generate_synthetic


def test_split_sizes_and_disjointness(tiny_dataset: Dataset):
    train, valid, test = split_queries(tiny_dataset, (0.5, 0.25, 0.25), seed=1)

    assert (len(train), len(valid), len(test)) == (6, 3, 3)
    assert (train.split_tag, valid.split_tag, test.split_tag) == (
        SplitTag.TRAIN,
        SplitTag.VALID,
        SplitTag.TEST,
    )
    all_qids = train.qids + valid.qids + test.qids
    assert sorted(all_qids) == sorted(tiny_dataset.qids)


def test_split_is_seeded(tiny_dataset: Dataset):
    a = split_queries(tiny_dataset, (0.6, 0.2, 0.2), seed=5)
    b = split_queries(tiny_dataset, (0.6, 0.2, 0.2), seed=5)
    assert [s.qids for s in a] == [s.qids for s in b]


def test_split_keeps_relative_order(tiny_dataset: Dataset):
    train, _, _ = split_queries(tiny_dataset, (0.5, 0.25, 0.25), seed=2)
    positions = [tiny_dataset.qids.index(q) for q in train.qids]
    assert positions == sorted(positions)


@pytest.mark.parametrize(
    "fractions",
    [(0.5, 0.5, 0.5), (1.0, 0.0, 0.0), (0.8, 0.1)],
)
def test_bad_fractions(tiny_dataset: Dataset, fractions):
    with pytest.raises(SplitError):
        split_queries(tiny_dataset, fractions, seed=0)


def test_too_few_queries():
    ds = generate_synthetic(n_queries=2, docs_per_query=3, feature_dim=2, seed=0)
    with pytest.raises(SplitError):
        split_queries(ds, (0.6, 0.2, 0.2), seed=0)


def test_minmax_maps_train_into_unit_box(tiny_dataset: Dataset):
    scaler = fit_minmax(tiny_dataset)
    scaled = scaler.apply(tiny_dataset)
    matrix = np.vstack([q.feature_matrix for q in scaled.queries])

    assert matrix.min(axis=0) == pytest.approx(np.zeros(5))
    assert matrix.max(axis=0) == pytest.approx(np.ones(5))
    assert scaled.qids == tiny_dataset.qids


def test_constant_feature_maps_to_zero():
    scaler = FeatureScaler(minimum=[1.0, 2.0], maximum=[3.0, 2.0])
    out = scaler.transform(np.array([[2.0, 2.0], [5.0, 7.0]]))
    np.testing.assert_allclose(out, [[0.5, 0.0], [2.0, 0.0]])


def test_scaler_survives_json(tiny_dataset: Dataset):
    """Statistics travel with checkpoints as JSON."""
    scaler = fit_minmax(tiny_dataset)
    assert FeatureScaler.model_validate_json(scaler.model_dump_json()) == scaler


def test_synthetic_is_deterministic_and_graded():
    a = generate_synthetic(n_queries=50, docs_per_query=10, feature_dim=8, seed=4)
    b = generate_synthetic(n_queries=50, docs_per_query=10, feature_dim=8, seed=4)
    assert a == b

    grades = np.concatenate([q.grades for q in a.queries])
    assert grades.min() >= 0 and grades.max() <= MAX_GRADE
    # skewed towards irrelevant documents
    assert np.mean(grades == 0) > np.mean(grades == MAX_GRADE)
    assert len(np.unique(grades)) >= 3
