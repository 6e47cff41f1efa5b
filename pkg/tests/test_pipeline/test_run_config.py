"""Tests for experiment config loading, overrides and compatibility rules."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from CXq_rank.losses.registry import LossVariant
from CXq_rank.pipeline.run_config import (
    ConfigError,
    RunConfig,
    apply_override,
    load_run_config,
    parse_scalar,
    validate_config,
    write_config_snapshot,
)
from CXq_rank.training.lists import LabelSource

CONFIG_TOML = """\
seed = 5

[data]
n_queries = 40
docs_per_query = 6

[em]
alpha0 = 0.3
epochs = 2

[train]
variant = "bayes_ipw"
"""


def test_parse_scalar():
    assert parse_scalar("0.1") == 0.1
    assert parse_scalar("3") == 3
    assert parse_scalar("true") is True
    assert parse_scalar('"opt"') == "opt"
    assert parse_scalar("opt") == "opt"
    assert parse_scalar("[32, 16]") == [32, 16]


def test_apply_override_nested():
    data: dict = {"em": {"epochs": 3}}
    apply_override(data, "em.alpha0=0.1")
    apply_override(data, "model.hidden=[8, 4]")
    assert data == {"em": {"epochs": 3, "alpha0": 0.1}, "model": {"hidden": [8, 4]}}
    with pytest.raises(ConfigError):
        apply_override(data, "no_equals_sign")
    with pytest.raises(ConfigError, match="not a section"):
        apply_override(data, "em.epochs.inner=1")


def test_load_toml_with_overrides(tmp_path: Path):
    path = tmp_path / "exp.toml"
    path.write_text(CONFIG_TOML)
    cfg = load_run_config(path, overrides=["em.alpha0=0.1", "train.epochs=4"], seed=9, output_dir=tmp_path / "o")
    assert cfg.seed == 9
    assert cfg.em.alpha0 == 0.1
    assert cfg.em.epochs == 2
    assert cfg.train.variant == LossVariant.BAYES_IPW
    assert cfg.train.epochs == 4
    assert cfg.data.n_queries == 40
    assert cfg.output_dir == tmp_path / "o"


def test_load_json(tmp_path: Path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"seed": 2, "sim": {"list_size": 4}}))
    assert load_run_config(path).sim.list_size == 4


def test_default_output_dir_only_when_unset(tmp_path: Path):
    cfg = load_run_config(default_output_dir=tmp_path / "default")
    assert cfg.output_dir == tmp_path / "default"
    cfg = load_run_config(overrides=[f"output_dir={json.dumps(str(tmp_path / 'x'))}"], default_output_dir=tmp_path)
    assert cfg.output_dir == tmp_path / "x"


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="em.alpha_zero"):
        load_run_config(overrides=["em.alpha_zero=0.1"])


def test_missing_and_malformed_files(tmp_path: Path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / "absent.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = = 3")
    with pytest.raises(ConfigError):
        load_run_config(bad)


def test_true_relevance_rejects_debiased_losses():
    for variant in ("ipw_pairwise", "bayes_ipw", "opt", "ipw_pointwise"):
        with pytest.raises(ConfigError):
            validate_config({"train": {"variant": variant, "label_source": "relevance_upper_bound"}})
    cfg = validate_config({"train": {"variant": "naive_pairwise", "label_source": "relevance_upper_bound"}})
    assert cfg.train.label_source == LabelSource.RELEVANCE_UPPER_BOUND


def test_pointwise_ipw_needs_categorical_labels():
    with pytest.raises(ConfigError, match="categorical"):
        validate_config({"train": {"variant": "ipw_pointwise"}})
    clicks = validate_config({"train": {"variant": "ipw_pointwise", "label_source": "click_categorical"}})
    assert clicks.train.variant == LossVariant.IPW_POINTWISE
    projected = validate_config(
        {"train": {"variant": "ipw_pointwise"}, "sim": {"combine": {"weights": [1.0, 0.0]}}}
    )
    assert projected.sim.combine.categorical


def test_fraction_and_file_rules():
    with pytest.raises(ConfigError):
        validate_config({"data": {"valid_fraction": 0.5, "test_fraction": 0.5}})
    with pytest.raises(ConfigError):
        validate_config({"data": {"source": "files"}})


def test_resolved_propagates_seed():
    cfg = validate_config({"seed": 17, "em": {"seed": 1}})
    resolved = cfg.resolved()
    assert resolved.sim.seed == resolved.em.seed == resolved.train.seed == 17


def test_config_hash_ignores_output_dir(tmp_path: Path):
    a = validate_config({"seed": 1, "output_dir": str(tmp_path / "a")})
    b = validate_config({"seed": 1, "output_dir": str(tmp_path / "b")})
    c = validate_config({"seed": 2})
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()


def test_with_variant(tmp_path: Path):
    cfg = RunConfig()
    other = cfg.with_variant("naive_pairwise", output_dir=tmp_path / "naive")
    assert other.train.variant == LossVariant.NAIVE_PAIRWISE
    assert other.output_dir == tmp_path / "naive"
    assert cfg.train.variant == LossVariant.OPT


def test_snapshot_is_resolved_json(tmp_path: Path):
    cfg = validate_config({"seed": 4})
    path = write_config_snapshot(cfg, tmp_path / "run" / "config.json")
    payload = json.loads(path.read_text())
    assert payload["em"]["seed"] == 4
    assert "output_dir" not in payload
    assert validate_config(payload).config_hash() == cfg.config_hash()
