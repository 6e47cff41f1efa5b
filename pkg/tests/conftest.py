"""Shared test fixtures."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from CXq_rank.estimation.pairs import PairBatch, ordered_pair_index
from CXq_rank.letor.models import Dataset
from CXq_rank.letor.synthetic import generate_synthetic
from CXq_rank.model.mlp import MlpSpec, Ranker
from CXq_rank.pipeline.run_config import RunConfig, validate_config
from CXq_rank.simulation.models import Session, SimConfig
from CXq_rank.simulation.sessions import simulate_dataset

LETOR_SAMPLE = """\
2 qid:1 1:0.5 3:1.25 # first
0 qid:1 2:-1.0
1 qid:1 1:0.1 2:0.2 3:0.3

4 qid:7 3:2.0
0 qid:7 1:1.0
"""


@pytest.fixture
def letor_sample(tmp_path: Path) -> Path:
    """A small two-query LETOR file."""
    path = tmp_path / "sample.txt"
    path.write_text(LETOR_SAMPLE)
    return path


@pytest.fixture
def tiny_dataset() -> Dataset:
    return generate_synthetic(n_queries=12, docs_per_query=6, feature_dim=5, seed=3)


@pytest.fixture
def tiny_spec() -> MlpSpec:
    return MlpSpec(input_dim=5, hidden=(4, 3), init_seed=1)


@pytest.fixture
def ranker(tiny_spec: MlpSpec) -> Ranker:
    return Ranker(tiny_spec)


@pytest.fixture
def sim_cfg() -> SimConfig:
    return SimConfig(list_size=5, sessions_per_query=3, seed=7)


@pytest.fixture
def sessions(tiny_dataset: Dataset, sim_cfg: SimConfig) -> list[Session]:
    return simulate_dataset(tiny_dataset, sim_cfg)


@pytest.fixture
def make_batch() -> Callable[..., PairBatch]:
    """Factory of random list batches with every ordered pair of each list."""

    def _make(
        rng: np.random.Generator,
        n_lists: int = 3,
        list_size: int = 4,
        dim: int = 5,
        labels: np.ndarray | None = None,
    ) -> PairBatch:
        n_items = n_lists * list_size
        a, b = ordered_pair_index(list_size)
        offsets = np.repeat(np.arange(n_lists) * list_size, len(a))
        if labels is None:
            labels = rng.integers(0, 3, size=n_items).astype(np.float64)
        return PairBatch(
            features=rng.normal(size=(n_items, dim)),
            positions=np.tile(np.arange(1, list_size + 1), n_lists),
            labels=np.asarray(labels, dtype=np.float64),
            list_index=np.repeat(np.arange(n_lists), list_size),
            idx_i=np.tile(a, n_lists) + offsets,
            idx_j=np.tile(b, n_lists) + offsets,
        )

    return _make


@pytest.fixture
def small_run_config(tmp_path: Path) -> RunConfig:
    """A desk-sized end-to-end config that finishes in a few seconds."""
    return validate_config(
        {
            "seed": 11,
            "output_dir": str(tmp_path / "run"),
            "data": {"n_queries": 24, "docs_per_query": 5, "feature_dim": 4},
            "sim": {"list_size": 5, "sessions_per_query": 2},
            "em": {"epochs": 2, "batch_size": 16},
            "model": {"hidden": [4]},
            "train": {"epochs": 2, "batch_size": 8},
        }
    )


@pytest.fixture
def finite_difference() -> Callable[[Callable[[np.ndarray], float], np.ndarray], np.ndarray]:
    """Central-difference gradient of a scalar function of a flat vector."""

    def _grad(f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
        out = np.zeros_like(x)
        for k in range(len(x)):
            up, down = x.copy(), x.copy()
            up[k] += eps
            down[k] -= eps
            out[k] = (f(up) - f(down)) / (2.0 * eps)
        return out

    return _grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))


@pytest.fixture
def rel_err() -> Callable[[np.ndarray, np.ndarray], float]:
    return relative_error
