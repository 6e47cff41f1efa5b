"""Tests for training list construction and the SGD trainer."""

from __future__ import annotations

import numpy as np
import pytest

from CXq_rank.estimation.bias_params import init_default
from CXq_rank.evaluation.report import EvalReport
from CXq_rank.letor.models import Dataset
from CXq_rank.losses.registry import LossContext, LossVariant
from CXq_rank.model.mlp import MlpSpec, Ranker
from CXq_rank.simulation.models import Session
from CXq_rank.training.lists import LabelSource, training_lists
from CXq_rank.training.trainer import TrainConfig, train_ranker


def test_relevance_lists_hold_true_grades(tiny_dataset: Dataset):
    batch = training_lists(LabelSource.RELEVANCE_UPPER_BOUND, tiny_dataset)
    assert batch.n_lists == len(tiny_dataset)
    assert batch.n_items == tiny_dataset.n_documents
    np.testing.assert_array_equal(batch.labels, np.concatenate([q.grades for q in tiny_dataset.queries]))
    assert batch.n_pairs == len(tiny_dataset) * 6 * 5


def test_logged_label_sources(tiny_dataset: Dataset, sessions: list[Session]):
    clicks = training_lists(LabelSource.CLICK_CATEGORICAL, tiny_dataset, sessions)
    synth = training_lists(LabelSource.SYNTHESIZED_CONTINUOUS, tiny_dataset, sessions)
    np.testing.assert_array_equal(clicks.labels, np.concatenate([s.clicks for s in sessions]))
    np.testing.assert_array_equal(synth.labels, np.concatenate([s.synth for s in sessions]))
    np.testing.assert_array_equal(clicks.features, synth.features)
    assert clicks.n_lists == len(sessions)


def _spec() -> MlpSpec:
    return MlpSpec(input_dim=5, hidden=(6,), init_seed=3)


def test_zero_epochs_returns_initial_snapshot(tiny_dataset: Dataset):
    batch = training_lists(LabelSource.RELEVANCE_UPPER_BOUND, tiny_dataset)
    ranker = Ranker(_spec())
    result = train_ranker(batch, TrainConfig(epochs=0), ranker, LossContext())
    assert result.epochs_run == 0
    np.testing.assert_array_equal(result.ranker.params, ranker.params)
    assert result.ranker is not ranker


def test_training_lowers_the_loss(tiny_dataset: Dataset):
    batch = training_lists(LabelSource.RELEVANCE_UPPER_BOUND, tiny_dataset)
    cfg = TrainConfig(variant=LossVariant.NAIVE_PAIRWISE, lr=0.05, epochs=15, batch_size=4)
    result = train_ranker(batch, cfg, Ranker(_spec()), LossContext())
    assert result.epochs_run == 15
    assert result.history[-1].loss < result.history[0].loss


def test_training_is_deterministic(tiny_dataset: Dataset, sessions: list[Session]):
    batch = training_lists(LabelSource.SYNTHESIZED_CONTINUOUS, tiny_dataset, sessions)
    params = init_default(5)
    context = LossContext(params=params, theta=np.asarray(params.theta))
    cfg = TrainConfig(variant=LossVariant.OPT, epochs=3, batch_size=5, seed=9)
    first = train_ranker(batch, cfg, Ranker(_spec()), context, valid=tiny_dataset)
    second = train_ranker(batch, cfg, Ranker(_spec()), context, valid=tiny_dataset)
    np.testing.assert_array_equal(first.ranker.params, second.ranker.params)
    assert [h.loss for h in first.history] == [h.loss for h in second.history]


def test_early_stopping_keeps_best_checkpoint(tiny_dataset: Dataset, mocker):
    rounds = iter([0.5, 0.4, 0.45, 0.3, 0.9])
    seen: list[np.ndarray] = []

    def fake_evaluate(ranker, valid, cutoffs):
        seen.append(ranker.params.copy())
        return EvalReport(ndcg_at={5: next(rounds)})

    mocker.patch("CXq_rank.training.trainer.evaluate", side_effect=fake_evaluate)
    batch = training_lists(LabelSource.RELEVANCE_UPPER_BOUND, tiny_dataset)
    cfg = TrainConfig(variant=LossVariant.NAIVE_PAIRWISE, epochs=10, patience=2, batch_size=6)
    ranker = Ranker(_spec())
    result = train_ranker(batch, cfg, ranker, LossContext(), valid=tiny_dataset)

    assert result.epochs_run == 3
    assert result.best_valid_ndcg == pytest.approx(0.5)
    assert [h.valid_ndcg for h in result.history] == [0.5, 0.4, 0.45]
    np.testing.assert_array_equal(result.ranker.params, seen[0])
    # the live ranker is rolled back from the last round to the best one
    assert not np.array_equal(seen[-1], seen[0])
    np.testing.assert_array_equal(ranker.params, seen[0])
    assert result.ranker is not ranker


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(variant="lambdamart")
    with pytest.raises(ValueError):
        TrainConfig(unknown=1)
