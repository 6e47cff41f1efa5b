"""Tests for the regression EM and its M-steps."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from CXq_rank.estimation.bias_params import BiasParams, EstimationError, blend, init_default
from CXq_rank.estimation.em import (
    EmConfig,
    EmTrace,
    PositionStatistics,
    m_step_positions,
    m_step_regression,
    regression_gradient,
    run_em,
    run_em_on_batch,
)
from CXq_rank.estimation.oracle import sample_pair_outcomes
from CXq_rank.estimation.pairs import ObservedEvent, PairBatch
from CXq_rank.estimation.posteriors import PairPosteriors, posterior_arrays
from CXq_rank.estimation.pointwise_em import item_posteriors, run_pointwise_em
from CXq_rank.letor.models import Dataset
from CXq_rank.model.mlp import MlpSpec, Ranker, sigmoid
from CXq_rank.simulation.models import Session


def _true_params(theta: list[float], eps_plus: float = 0.85, eps_minus: float = 0.15) -> BiasParams:
    n = len(theta)
    return BiasParams(
        theta=np.array(theta),
        theta_minus=np.array(theta) / 2.0,
        eps_plus=np.full((n, n), eps_plus),
        eps_minus=np.full((n, n), eps_minus),
    )


def _random_positions(rng: np.random.Generator, n_pairs: int, n_positions: int) -> tuple[np.ndarray, np.ndarray]:
    pos_i = rng.integers(1, n_positions + 1, n_pairs)
    shift = rng.integers(1, n_positions, n_pairs)
    pos_j = (pos_i - 1 + shift) % n_positions + 1
    return pos_i, pos_j


def _single_pair_batch(
    pos_i: np.ndarray, pos_j: np.ndarray, positive: np.ndarray, features: np.ndarray | None = None
) -> PairBatch:
    """One list per pair; a positive pair is labelled (1, 0), any other (0, 0)."""
    n = len(pos_i)
    idx_i = 2 * np.arange(n)
    idx_j = idx_i + 1
    positions = np.empty(2 * n, dtype=np.int64)
    positions[idx_i] = pos_i
    positions[idx_j] = pos_j
    labels = np.zeros(2 * n)
    labels[idx_i] = positive.astype(np.float64)
    return PairBatch(
        features=np.zeros((2 * n, 1)) if features is None else features,
        positions=positions,
        labels=labels,
        list_index=np.repeat(np.arange(n), 2),
        idx_i=idx_i,
        idx_j=idx_j,
    )


def _draw(rng: np.random.Generator, truth: BiasParams, pos_i, pos_j, gamma, beta) -> np.ndarray:
    a, b = pos_i - 1, pos_j - 1
    return sample_pair_outcomes(
        truth.theta[a], truth.theta[b], truth.eps_plus[a, b], truth.eps_minus[a, b], gamma, beta, rng
    ).positive


def _coherent_events(batch: PairBatch) -> np.ndarray:
    return batch.events(bucketed=False)


def _full_batch_cfg(n_lists: int, epochs: int) -> EmConfig:
    return EmConfig(
        alpha0=1.0,
        alpha_schedule="constant",
        batch_size=n_lists,
        epochs=epochs,
        head_lr=0.0,
        shuffle=False,
        bucketed_posteriors=False,
        tol=1e-12,
    )


def test_alpha_schedules():
    decay = EmConfig(alpha0=0.2, decay_batches=100.0)
    assert decay.alpha_at(0) == pytest.approx(0.2)
    assert decay.alpha_at(100) == pytest.approx(0.1)
    assert EmConfig(alpha0=0.3, alpha_schedule="constant").alpha_at(500) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        EmConfig(alpha0=0.0)
    with pytest.raises(ValueError):
        EmConfig(batch_size=0)


def test_m_step_recovers_theta_from_true_posteriors():
    """One full-batch M-step lands within sampling error of the generating theta."""
    rng = np.random.default_rng(0)
    n = 100_000
    truth = _true_params([1.0, 0.5])
    pos_i, pos_j = _random_positions(rng, n, 2)
    gamma, beta = rng.uniform(0.05, 0.95, (2, n))
    batch = _single_pair_batch(pos_i, pos_j, _draw(rng, truth, pos_i, pos_j, gamma, beta))
    a, b = pos_i - 1, pos_j - 1
    post = posterior_arrays(
        _coherent_events(batch),
        truth.theta[a],
        truth.theta[b],
        truth.theta_minus[b],
        truth.eps_plus[a, b],
        truth.eps_minus[a, b],
        gamma,
        beta,
    )
    estimate = m_step_positions(batch, post, init_default(2), alpha=1.0)
    three_sigma = 3.0 * np.sqrt(0.25 / n)
    assert estimate.theta[0] == pytest.approx(1.0, abs=1e-3)
    assert estimate.theta[1] == pytest.approx(0.5, abs=three_sigma)


def test_m_step_empty_cells_keep_prior():
    rng = np.random.default_rng(1)
    n = 200
    pos_i = np.where(rng.random(n) < 0.5, 1, 2)
    pos_j = 3 - pos_i
    batch = _single_pair_batch(pos_i, pos_j, rng.random(n) < 0.4)
    init = init_default(3)
    post = posterior_arrays(_coherent_events(batch), 0.8, 0.5, 0.25, 0.9, 0.1, rng.uniform(0.1, 0.9, n), 0.5)
    updated = m_step_positions(batch, post, init, alpha=0.5)
    assert updated.theta[2] == pytest.approx(init.theta[2])
    assert updated.eps_plus[0, 2] == pytest.approx(0.9)
    assert updated.eps_minus[2, 1] == pytest.approx(0.1)
    assert updated.theta[1] != pytest.approx(init.theta[1])
    assert updated.satisfies_constraints()


def test_m_step_rejects_empty_or_oversized_batch():
    empty = _single_pair_batch(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool))
    post = posterior_arrays(np.zeros(0, dtype=np.int8), 0.5, 0.5, 0.5, 0.9, 0.1, 0.5, 0.5)
    with pytest.raises(EstimationError, match="empty"):
        m_step_positions(empty, post, init_default(2), alpha=0.5)

    batch = _single_pair_batch(np.array([1]), np.array([4]), np.array([True]))
    post = posterior_arrays(np.array([ObservedEvent.POSITIVE]), 0.5, 0.5, 0.5, 0.9, 0.1, 0.5, 0.5)
    with pytest.raises(EstimationError, match="position 4"):
        m_step_positions(batch, post, init_default(3), alpha=0.5)


def test_epochs_zero_returns_inputs(sessions: list[Session], tiny_dataset: Dataset, ranker: Ranker):
    init = init_default(5)
    before = ranker.params.copy()
    params, out_ranker, trace = run_em(sessions, tiny_dataset, EmConfig(epochs=0), init, ranker)
    assert params is init
    assert out_ranker is ranker
    np.testing.assert_array_equal(ranker.params, before)
    assert trace.rows == []


def test_session_beyond_parameter_positions(sessions: list[Session], tiny_dataset: Dataset, ranker: Ranker):
    with pytest.raises(EstimationError):
        run_em(sessions, tiny_dataset, EmConfig(epochs=1), init_default(3), ranker)


def test_full_batch_loglik_never_decreases(ranker: Ranker):
    """Frozen heads, alpha 1, one batch: the observed-pair log-likelihood is monotone."""
    rng = np.random.default_rng(2)
    n = 3000
    truth = _true_params([0.95, 0.6, 0.35])
    pos_i, pos_j = _random_positions(rng, n, 3)
    features = rng.normal(size=(2 * n, 5))
    scores = ranker.forward_batch(features)
    gamma = sigmoid(scores.scores[0::2] - scores.scores[1::2])
    beta = scores.beta[0::2]
    batch = _single_pair_batch(pos_i, pos_j, _draw(rng, truth, pos_i, pos_j, gamma, beta), features)

    params, _, trace = run_em_on_batch(batch, _full_batch_cfg(n, epochs=10), init_default(3), ranker)
    logliks = np.array(trace.epoch_logliks)
    assert len(logliks) >= 3
    assert np.all(np.diff(logliks) >= -1e-9 * np.abs(logliks[:-1]))
    assert logliks[-1] > logliks[0]
    assert params.satisfies_constraints()


def test_parameters_stay_in_box(sessions: list[Session], tiny_dataset: Dataset, tiny_spec: MlpSpec):
    cfg = EmConfig(epochs=2, batch_size=4, alpha0=0.9, seed=3)
    _, _, trace = run_em(sessions, tiny_dataset, cfg, init_default(5), Ranker(tiny_spec))
    frame = trace.to_frame()
    values = frame.filter(frame["param"] != "loglik")["value"].to_numpy()
    assert values.size > 0
    assert np.all((values > 0.0) & (values < 1.0))


def test_run_em_is_deterministic(sessions: list[Session], tiny_dataset: Dataset, tiny_spec: MlpSpec):
    cfg = EmConfig(epochs=2, batch_size=5, seed=4)
    first, r1, _ = run_em(sessions, tiny_dataset, cfg, init_default(5), Ranker(tiny_spec))
    second, r2, _ = run_em(sessions, tiny_dataset, cfg, init_default(5), Ranker(tiny_spec))
    assert first == second
    np.testing.assert_array_equal(r1.params, r2.params)


def test_trace_round_trip(tmp_path: Path, sessions: list[Session], tiny_dataset: Dataset, ranker: Ranker):
    _, _, trace = run_em(sessions, tiny_dataset, EmConfig(epochs=1, batch_size=8), init_default(5), ranker)
    path = trace.write(tmp_path / "em_trace.tsv", config_hash="h")
    loaded = EmTrace.read(path)
    assert len(loaded.rows) == len(trace.rows)
    for got, want in zip(loaded.rows, trace.rows, strict=True):
        assert got[:5] == want[:5]
        assert got[5] == pytest.approx(want[5], rel=1e-12, abs=1e-300)
    assert len(loaded.epoch_logliks) == 1


def test_regression_step_follows_certain_preference():
    spec = MlpSpec(input_dim=3, hidden=(4,), init_seed=5)
    ranker = Ranker(spec)
    features = np.array([[0.2, -0.1, 0.4], [0.3, 0.5, -0.2]])
    batch = PairBatch(
        features=features,
        positions=np.array([1, 2]),
        labels=np.array([1.0, 0.0]),
        list_index=np.zeros(2, dtype=np.int64),
        idx_i=np.array([0]),
        idx_j=np.array([1]),
    )
    certain = PairPosteriors(*(np.ones(1) for _ in range(8)))
    rng = np.random.default_rng(0)
    start = ranker.gamma(features[0], features[1])
    for _ in range(50):
        m_step_regression(batch, certain, ranker, head_lr=0.5, rng=rng)
    assert ranker.gamma(features[0], features[1]) > start
    assert ranker.beta(features[0]) > 0.5


def _linear_ranker(w: np.ndarray, v: np.ndarray, beta_bias: float) -> Ranker:
    """Ranker with ``f(x) = w.x`` and ``beta(x) = sigmoid(v.x + beta_bias)`` for ``|x| < 10``.

    The hidden layer is the identity shifted into the linear part of the ELU.
    """
    d = len(w)
    ranker = Ranker(MlpSpec(input_dim=d, hidden=(d,), init_seed=0))
    shift = 10.0
    ranker.set_params(
        np.concatenate(
            [np.eye(d).ravel(), np.full(d, shift), w, [0.0], v, [beta_bias - shift * v.sum()]]
        )
    )
    return ranker


@pytest.mark.slow
def test_em_recovers_generating_parameters():
    """Default config, learned heads, pairs drawn from the generative model.

    A positive pair whose lower item was examined is labelled (2, 1), one whose
    lower item was not examined (1, 0); other pairs (1, 1). The zero label then
    means "not examined", and theta_minus tends to the floor.
    """
    rng = np.random.default_rng(7)
    n_positions, n = 5, 200_000
    truth = _true_params([1.0 / k for k in range(1, n_positions + 1)], eps_plus=0.9, eps_minus=0.1)
    w, v, beta_bias = np.array([1.5, -1.0, 0.5]), np.array([1.0, 0.5, -0.5]), 0.8

    pos_i, pos_j = _random_positions(rng, n, n_positions)
    features = rng.uniform(-1.0, 1.0, (2 * n, 3))
    x_i, x_j = features[0::2], features[1::2]
    gamma = sigmoid((x_i - x_j) @ w)
    beta = sigmoid(x_i @ v + beta_bias)
    a, b = pos_i - 1, pos_j - 1
    draws = sample_pair_outcomes(
        truth.theta[a], truth.theta[b], truth.eps_plus[a, b], truth.eps_minus[a, b],
        gamma, beta, rng,
    )
    batch = _single_pair_batch(pos_i, pos_j, draws.positive, features)
    labels = np.ones(2 * n)
    examined = draws.e_j.astype(bool)
    labels[0::2] = np.where(draws.positive & examined, 2.0, 1.0)
    labels[1::2] = np.where(draws.positive & ~examined, 0.0, 1.0)
    batch = replace(batch, labels=labels)
    assert set(batch.events().tolist()) == {
        ObservedEvent.BOTH_POSITIVE,
        ObservedEvent.LOWER_ZERO,
        ObservedEvent.NON_POSITIVE,
    }

    shape = (n_positions, n_positions)
    init = BiasParams(
        theta=np.full(n_positions, 0.6),
        theta_minus=np.full(n_positions, 0.3),
        eps_plus=np.full(shape, 0.8),
        eps_minus=np.full(shape, 0.2),
    )
    ranker = _linear_ranker(w, v, beta_bias)
    start = ranker.params.copy()
    params, out_ranker, _ = run_em_on_batch(batch, EmConfig(), init, ranker)

    assert not np.array_equal(out_ranker.params, start)
    assert np.mean(np.abs(params.theta - truth.theta)) <= 0.05
    off = params.off_diagonal()
    assert np.mean(np.abs(params.eps_plus[off] - truth.eps_plus[off])) <= 0.05
    assert np.mean(np.abs(params.eps_minus[off] - truth.eps_minus[off])) <= 0.05


def test_statistics_blend_pools_sparse_cells():
    """Two one-pair batches in the same cell: the running estimate pools their mass."""
    batch = _single_pair_batch(np.array([1]), np.array([2]), np.array([True]))
    # fields: ee_rpos, ee_rneg, e_only, rest, exam_i, exam_j, rel_i, rel_pair
    clicked = PairPosteriors(*(np.array([x]) for x in (0.9, 0.1, 0.0, 0.0, 1.0, 1.0, 0.9, 0.9)))
    skipped = PairPosteriors(*(np.array([x]) for x in (0.1, 0.4, 0.2, 0.3, 0.6, 0.4, 0.3, 0.3)))
    unclicked = replace(batch, labels=np.zeros(2))
    first = PositionStatistics.from_batch(batch, clicked, 2)
    second = PositionStatistics.from_batch(unclicked, skipped, 2)

    init = init_default(2)
    pooled = first.blend(second, 0.5).estimate(init)
    assert pooled.eps_plus[0, 1] == pytest.approx(0.45 / 0.5)
    assert pooled.eps_minus[0, 1] == pytest.approx(0.05 / 0.25)
    np.testing.assert_allclose(pooled.theta, [0.8, 0.7])
    # averaging the two batch ratios instead gives (1 + 0) / 2
    averaged = blend(first.estimate(init), second.estimate(init), 0.5)
    assert averaged.eps_plus[0, 1] == pytest.approx(0.5)


def test_pointwise_posteriors():
    exam, rel = item_posteriors(np.array([True, False]), np.array([0.6, 0.6]), np.array([0.5, 0.5]))
    np.testing.assert_allclose(exam, [1.0, 0.6 * 0.5 / 0.7])
    np.testing.assert_allclose(rel, [1.0, 0.4 * 0.5 / 0.7])


def test_pointwise_em_recovers_propensities(ranker: Ranker):
    rng = np.random.default_rng(8)
    n_lists, list_size = 10_000, 3
    theta = np.array([0.9, 0.55, 0.3])
    features = rng.normal(size=(n_lists * list_size, 5))
    positions = np.tile(np.arange(1, list_size + 1), n_lists)
    beta = ranker.forward_batch(features).beta
    clicks = rng.random(len(positions)) < theta[positions - 1] * beta
    batch = PairBatch(
        features=features,
        positions=positions,
        labels=clicks.astype(np.float64),
        list_index=np.repeat(np.arange(n_lists), list_size),
        idx_i=np.zeros(0, dtype=np.int64),
        idx_j=np.zeros(0, dtype=np.int64),
    )
    cfg = _full_batch_cfg(n_lists, epochs=200)
    result = run_pointwise_em(batch, cfg, list_size, ranker)
    np.testing.assert_allclose(result.theta, theta, atol=0.05)
    assert all(b >= a - 1e-9 * abs(a) for a, b in zip(result.logliks, result.logliks[1:]))

    unchanged = run_pointwise_em(batch, cfg.model_copy(update={"epochs": 0}), list_size, ranker)
    np.testing.assert_allclose(unchanged.theta, [1.0 - cfg.floor, 0.5, 1.0 / 3.0])


def test_pointwise_em_position_overflow(ranker: Ranker):
    batch = PairBatch(
        features=np.zeros((2, 5)),
        positions=np.array([1, 4]),
        labels=np.zeros(2),
        list_index=np.zeros(2, dtype=np.int64),
        idx_i=np.zeros(0, dtype=np.int64),
        idx_j=np.zeros(0, dtype=np.int64),
    )
    with pytest.raises(EstimationError):
        run_pointwise_em(batch, EmConfig(), 3, ranker)


def test_even_posteriors_give_zero_mean_gamma_gradient():
    """Targets drawn at 0.5 against gamma = 0.5: the score-head gradient averages to 0."""
    spec = MlpSpec(input_dim=3, hidden=(2,), init_seed=4)
    width = spec.hidden[-1]
    # score head: the second to last layer, weights then bias
    head = slice(spec.n_params - 2 * (width + 1), spec.n_params - (width + 1))
    ranker = Ranker(spec)
    params = ranker.params.copy()
    params[head] = 0.0
    ranker.set_params(params)

    rng = np.random.default_rng(12)
    n = 40
    features = rng.normal(size=(2 * n, 3))
    batch = PairBatch(
        features=features,
        positions=np.tile([1, 2], n),
        labels=np.zeros(2 * n),
        list_index=np.repeat(np.arange(n), 2),
        idx_i=2 * np.arange(n),
        idx_j=2 * np.arange(n) + 1,
    )
    even = PairPosteriors(*(np.full(n, 0.5) for _ in range(8)))
    record = ranker.forward_batch(features)
    np.testing.assert_allclose(sigmoid(record.scores[0::2] - record.scores[1::2]), 0.5)

    grads = np.array(
        [
            regression_gradient(batch, even, ranker, record, rng)[1][head][:width]
            for _ in range(4000)
        ]
    )
    mean = grads.mean(axis=0)
    sem = grads.std(axis=0, ddof=1) / np.sqrt(len(grads))
    assert np.all(sem > 0)
    assert np.all(np.abs(mean) <= 3.0 * sem)
