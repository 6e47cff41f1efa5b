"""Run manifest: flat ``key = value`` lines (a TOML subset)."""

from __future__ import annotations

import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any


def write_manifest(entries: dict[str, Any], path: Path) -> Path:
    """Keys in sorted order; strings, numbers and booleans only."""
    lines = []
    for key in sorted(entries):
        value = entries[key]
        if not isinstance(value, str | int | float | bool):
            raise TypeError(f"manifest value for {key} must be a scalar, got {type(value).__name__}")
        lines.append(f'"{key}" = {json.dumps(value)}')
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(path: Path) -> dict[str, Any]:
    with open(path, "rb") as f:
        return tomllib.load(f)
