"""Model checkpoints: a versioned binary container plus a JSON metadata sidecar.

Container layout (all integers little-endian)::

    b"CXQRANK\\0"         8-byte magic
    uint32                format version
    uint32                byte length L of the spec JSON
    L bytes               MlpSpec as UTF-8 JSON
    uint64                parameter count P
    P * float64           flat parameter vector (layout documented in model.mlp)

The sidecar ``<name>.meta.json`` carries training metadata. Neither file holds
timestamps, so identical training produces identical bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from CXq_rank.model.mlp import MlpSpec, ModelError, Ranker
from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)

MAGIC = b"CXQRANK\0"
FORMAT_VERSION = 1


class CheckpointError(ModelError):
    pass


class CheckpointMeta(BaseModel):
    """Sidecar metadata describing how a checkpoint was produced."""

    loss_variant: str | None = None
    label_source: str | None = None
    epochs_run: int = 0
    best_valid_ndcg: float | None = None
    config_hash: str | None = None
    normalization: dict[str, list[float]] | None = None
    activation: str | None = None
    init_scale: float | None = None
    extra: dict[str, Any] = Field(default_factory=dict)


def meta_path_for(path: Path) -> Path:
    return path.with_suffix(".meta.json")


def save_checkpoint(ranker: Ranker, path: Path, meta: CheckpointMeta | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    spec_json = ranker.spec.model_dump_json().encode("utf-8")
    params = np.ascontiguousarray(ranker.params, dtype="<f8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, len(spec_json)))
        f.write(spec_json)
        f.write(struct.pack("<Q", params.size))
        f.write(params.tobytes())
    meta = (meta or CheckpointMeta()).model_copy(
        update={"activation": ranker.spec.activation, "init_scale": ranker.spec.init_scale}
    )
    meta_path_for(path).write_text(meta.model_dump_json(indent=2), encoding="utf-8")
    logger.info("checkpoint_saved", path=str(path), params=params.size)
    return path


def load_checkpoint(path: Path) -> tuple[Ranker, CheckpointMeta]:
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a ranker checkpoint")
    offset = len(MAGIC)
    version, spec_len = struct.unpack_from("<II", data, offset)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version {version}")
    offset += 8
    spec = MlpSpec.model_validate_json(data[offset : offset + spec_len])
    offset += spec_len
    (n_params,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    if len(data) - offset != 8 * n_params:
        raise CheckpointError(f"{path}: truncated parameter block")
    params = np.frombuffer(data, dtype="<f8", count=n_params, offset=offset).astype(np.float64)

    sidecar = meta_path_for(path)
    meta = (
        CheckpointMeta.model_validate_json(sidecar.read_text(encoding="utf-8"))
        if sidecar.exists()
        else CheckpointMeta()
    )
    if meta.activation not in (None, spec.activation):
        raise CheckpointError(
            f"{path}: metadata names activation {meta.activation!r}, spec has {spec.activation!r}"
        )
    return Ranker(spec, params), meta
