"""Experiment configuration: a pydantic model tree loaded from TOML or JSON.

Dotted ``--set`` overrides address nested keys (``em.alpha0=0.1``); values
are read as TOML scalars and fall back to plain strings.
"""

from __future__ import annotations

import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from CXq_rank.estimation.em import EmConfig
from CXq_rank.losses.registry import LossVariant
from CXq_rank.model.mlp import MlpSpec
from CXq_rank.simulation.models import SimConfig
from CXq_rank.training.lists import LabelSource
from CXq_rank.training.trainer import TrainConfig
from CXq_rank.utils.hashing import sha256_text


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    source: Literal["synthetic", "files"] = "synthetic"
    train: Path | None = None
    valid: Path | None = None
    test: Path | None = None
    n_queries: int = Field(default=300, ge=3)
    docs_per_query: int = Field(default=10, ge=2)
    feature_dim: int = Field(default=20, ge=1)
    noise: float = Field(default=0.3, ge=0.0)
    valid_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    normalize: bool = True

    @model_validator(mode="after")
    def _files_need_train(self) -> DataConfig:
        if self.source == "files" and self.train is None:
            raise ValueError("data.source = 'files' needs data.train")
        if self.valid_fraction + self.test_fraction >= 1.0:
            raise ValueError("valid_fraction + test_fraction must leave training queries")
        return self


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    hidden: tuple[int, ...] = (64, 32)
    init_scale: float = Field(default=1.0, gt=0.0)

    def spec(self, input_dim: int, init_seed: int) -> MlpSpec:
        return MlpSpec(
            input_dim=input_dim, hidden=self.hidden, init_seed=init_seed, init_scale=self.init_scale
        )


class RunConfig(BaseModel):
    """Everything one experiment run depends on.

    ``seed`` drives every stage; the per-section seeds are overwritten by
    :meth:`resolved`.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    data: DataConfig = Field(default_factory=DataConfig)
    sim: SimConfig = Field(default_factory=SimConfig)
    em: EmConfig = Field(default_factory=EmConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    seed: int = 0
    output_dir: Path = Path("runs/default")

    @model_validator(mode="after")
    def _labels_fit_variant(self) -> RunConfig:
        variant, source = self.train.variant, self.train.label_source
        if source == LabelSource.RELEVANCE_UPPER_BOUND and variant.debiased:
            raise ValueError(f"{variant.value} debiases clicks; it cannot train on true relevance")
        if variant == LossVariant.IPW_POINTWISE:
            categorical = source == LabelSource.CLICK_CATEGORICAL or (
                source == LabelSource.SYNTHESIZED_CONTINUOUS and self.sim.combine.categorical
            )
            if not categorical:
                raise ValueError("ipw_pointwise needs categorical click labels")
        return self

    def resolved(self) -> RunConfig:
        """Copy with every section seed set from ``seed``."""
        return self.model_copy(
            update={
                "sim": self.sim.model_copy(update={"seed": self.seed}),
                "em": self.em.model_copy(update={"seed": self.seed}),
                "train": self.train.model_copy(update={"seed": self.seed}),
            }
        )

    def canonical_json(self) -> str:
        """Sorted-key JSON of everything except ``output_dir``."""
        payload = self.resolved().model_dump(mode="json", exclude={"output_dir"})
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return sha256_text(self.canonical_json())

    def with_variant(self, variant: LossVariant | str, output_dir: Path | None = None) -> RunConfig:
        data = self.model_dump()
        data["train"]["variant"] = LossVariant(variant)
        if output_dir is not None:
            data["output_dir"] = output_dir
        return validate_config(data)


def parse_scalar(raw: str) -> Any:
    try:
        return tomllib.loads(f"value = {raw}")["value"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_override(data: dict[str, Any], assignment: str) -> dict[str, Any]:
    """Set one ``dotted.key=value`` in a nested dict (in place)."""
    key, sep, raw = assignment.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override must look like key=value, got {assignment!r}")
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"{key}: {part} is not a section")
        node = child
    node[parts[-1]] = parse_scalar(raw.strip())
    return data


def read_config_file(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix == ".json":
            return dict(json.loads(text))
        return tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from e


def validate_config(data: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(problems) from e


def load_run_config(
    path: Path | None = None,
    overrides: list[str] | None = None,
    seed: int | None = None,
    output_dir: Path | None = None,
    default_output_dir: Path | None = None,
) -> RunConfig:
    """File (if any), then ``--set`` overrides, then explicit seed / output dir.

    ``default_output_dir`` applies only when neither the file nor the overrides
    name an output directory.
    """
    data = read_config_file(path) if path is not None else {}
    for assignment in overrides or []:
        apply_override(data, assignment)
    if seed is not None:
        data["seed"] = seed
    if output_dir is not None:
        data["output_dir"] = str(output_dir)
    elif default_output_dir is not None:
        data.setdefault("output_dir", str(default_output_dir))
    return validate_config(data)


def write_config_snapshot(cfg: RunConfig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        cfg.resolved().model_dump_json(indent=2, exclude={"output_dir"}) + "\n", encoding="utf-8"
    )
    return path
