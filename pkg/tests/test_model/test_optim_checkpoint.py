"""Tests for SGD, clipping and checkpoints."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from CXq_rank.model.checkpoint import (
    CheckpointError,
    CheckpointMeta,
    load_checkpoint,
    meta_path_for,
    save_checkpoint,
)
from CXq_rank.model.mlp import DivergenceError, MlpSpec, ModelError, Ranker
from CXq_rank.model.optim import clip_by_global_norm, sgd_step


def test_clip_by_global_norm():
    g = np.array([3.0, 4.0])
    np.testing.assert_allclose(clip_by_global_norm(g, 10.0), g)
    np.testing.assert_allclose(clip_by_global_norm(g, 1.0), [0.6, 0.8])
    np.testing.assert_array_equal(clip_by_global_norm(g, 0.0), [0.0, 0.0])
    with pytest.raises(ModelError):
        clip_by_global_norm(g, -1.0)


def test_sgd_step_updates_in_place(ranker: Ranker):
    before = ranker.params.copy()
    grads = np.ones_like(before)
    sgd_step(ranker, grads, lr=0.5)
    np.testing.assert_allclose(ranker.params, before - 0.5)
    assert ranker.version == 1


def test_sgd_step_rejects_bad_input(ranker: Ranker):
    with pytest.raises(ModelError):
        sgd_step(ranker, np.ones(3), lr=0.1)
    with pytest.raises(ModelError):
        sgd_step(ranker, np.ones_like(ranker.params), lr=-0.1)
    bad = np.ones_like(ranker.params)
    bad[0] = np.nan
    with pytest.raises(DivergenceError):
        sgd_step(ranker, bad, lr=0.1)


def test_checkpoint_round_trip(tmp_path: Path, ranker: Ranker):
    meta = CheckpointMeta(
        loss_variant="opt",
        epochs_run=3,
        best_valid_ndcg=0.61,
        normalization={"minimum": [0.0], "maximum": [1.0]},
    )
    path = save_checkpoint(ranker, tmp_path / "model.ckpt", meta=meta)

    loaded, loaded_meta = load_checkpoint(path)
    assert loaded.spec == ranker.spec
    np.testing.assert_array_equal(loaded.params, ranker.params)
    assert loaded_meta == meta.model_copy(update={"activation": "elu", "init_scale": 1.0})
    assert meta_path_for(path).name == "model.meta.json"


def test_checkpoint_records_architecture(tmp_path: Path):
    spec = MlpSpec(input_dim=3, hidden=(4,), init_seed=2, init_scale=0.5)
    path = save_checkpoint(Ranker(spec), tmp_path / "model.ckpt")
    loaded, meta = load_checkpoint(path)
    assert loaded.spec.init_scale == 0.5
    assert loaded.spec.activation == "elu"
    assert (meta.activation, meta.init_scale) == ("elu", 0.5)

    sidecar = meta_path_for(path)
    sidecar.write_text(meta.model_copy(update={"activation": "relu"}).model_dump_json())
    with pytest.raises(CheckpointError, match="activation"):
        load_checkpoint(path)


def test_checkpoint_bytes_are_deterministic(tmp_path: Path, ranker: Ranker):
    a = save_checkpoint(ranker, tmp_path / "a.ckpt")
    b = save_checkpoint(ranker.snapshot(), tmp_path / "b.ckpt")
    assert a.read_bytes() == b.read_bytes()


def test_checkpoint_errors(tmp_path: Path, ranker: Ranker):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.ckpt")

    junk = tmp_path / "junk.ckpt"
    junk.write_bytes(b"not a checkpoint at all")
    with pytest.raises(CheckpointError):
        load_checkpoint(junk)

    path = save_checkpoint(ranker, tmp_path / "model.ckpt")
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
