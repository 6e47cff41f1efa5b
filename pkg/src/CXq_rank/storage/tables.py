"""TSV artifact tables with a ``# config_hash=`` provenance line."""

from __future__ import annotations

import re
from pathlib import Path

import polars as pl

from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)

_HASH_LINE = re.compile(r"^#\s*config_hash=([0-9a-f]+)\s*$")


def write_table(df: pl.DataFrame, path: Path, config_hash: str | None = None) -> Path:
    """Write ``df`` as tab-separated text, optionally prefixed by the config hash."""
    path.parent.mkdir(parents=True, exist_ok=True)
    body = df.write_csv(separator="\t", line_terminator="\n")
    header = f"# config_hash={config_hash}\n" if config_hash else ""
    path.write_text(header + body, encoding="utf-8")
    logger.debug("table_written", path=str(path), rows=len(df))
    return path


def read_table(path: Path, schema: dict[str, pl.DataType] | None = None) -> pl.DataFrame:
    return pl.read_csv(
        path,
        separator="\t",
        comment_prefix="#",
        schema_overrides=schema,
    )


def read_config_hash(path: Path) -> str | None:
    """The provenance hash of a table, or None when the file has none."""
    with open(path, encoding="utf-8") as f:
        match = _HASH_LINE.match(f.readline())
    return match.group(1) if match else None
