"""Centralized path resolution for run directories."""

from __future__ import annotations

import os
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from CXq_rank.config.settings import StorageSettings
from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)

LOCK_NAME = ".lock"
FAILED_NAME = "FAILED"
MANIFEST_NAME = "manifest.toml"
CONFIG_NAME = "config.json"


class RunLockedError(Exception):
    """Another process owns the run directory."""


@dataclass(frozen=True)
class RunPaths:
    """File layout of one run directory."""

    root: Path
    settings: StorageSettings

    @property
    def config(self) -> Path:
        return self.root / CONFIG_NAME

    @property
    def sessions(self) -> Path:
        return self.root / self.settings.sessions_filename

    @property
    def bias_params(self) -> Path:
        return self.root / self.settings.bias_params_filename

    @property
    def trace(self) -> Path:
        return self.root / self.settings.trace_filename

    @property
    def checkpoint(self) -> Path:
        return self.root / self.settings.checkpoint_filename

    @property
    def report(self) -> Path:
        return self.root / self.settings.report_filename

    @property
    def manifest(self) -> Path:
        return self.root / MANIFEST_NAME

    @property
    def failed_marker(self) -> Path:
        return self.root / FAILED_NAME

    @property
    def lock(self) -> Path:
        return self.root / LOCK_NAME

    def artifacts(self) -> dict[str, Path]:
        """Named artifact files that currently exist, in a fixed order."""
        named = {
            "config": self.config,
            "sessions": self.sessions,
            "bias_params": self.bias_params,
            "em_trace": self.trace,
            "checkpoint": self.checkpoint,
            "checkpoint_meta": self.checkpoint.with_suffix(".meta.json"),
            "eval_report": self.report,
        }
        return {name: path for name, path in named.items() if path.exists()}


def run_paths(settings: StorageSettings, run_dir: Path) -> RunPaths:
    return RunPaths(root=run_dir, settings=settings)


@contextmanager
def run_lock(paths: RunPaths) -> Iterator[None]:
    """Exclusive ownership of a run directory for the duration of the block."""
    paths.root.mkdir(parents=True, exist_ok=True)
    try:
        fd = os.open(paths.lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise RunLockedError(f"{paths.root} is locked by another run ({paths.lock})") from e
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        paths.lock.unlink(missing_ok=True)


def mark_failed(paths: RunPaths, stage: str, message: str) -> Path:
    paths.failed_marker.write_text(f"stage = {stage}\nerror = {message}\n", encoding="utf-8")
    logger.error("run_failed", run_dir=str(paths.root), stage=stage, error=message)
    return paths.failed_marker
