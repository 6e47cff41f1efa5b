"""Options and error handling shared by the experiment commands."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from typing_extensions import Annotated

from CXq_rank.config.settings import AppSettings
from CXq_rank.letor.models import LetorError
from CXq_rank.pipeline.compare import ComparisonError
from CXq_rank.pipeline.experiment import StageError
from CXq_rank.pipeline.run_config import ConfigError, RunConfig, load_run_config

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2

INPUT_ERRORS = (ConfigError, ValidationError, LetorError, ComparisonError)

ConfigOpt = Annotated[
    Optional[Path], typer.Option("--config", "-c", help="Experiment config (TOML or JSON)")
]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Seed for every stage")]
OutOpt = Annotated[Optional[Path], typer.Option("--out", "-o", help="Run directory")]
SetOpt = Annotated[
    Optional[list[str]],
    typer.Option("--set", help="Config override key=value (dotted keys, repeatable)"),
]


def exit_code_for(exc: BaseException) -> int:
    """1 for invalid input (also when a stage failed on it), 2 for runtime failures."""
    cause = exc.__cause__ if isinstance(exc, StageError) and exc.__cause__ is not None else exc
    return EXIT_INVALID if isinstance(cause, INPUT_ERRORS) else EXIT_RUNTIME


@contextmanager
def cli_errors() -> Iterator[None]:
    try:
        yield
    except typer.Exit:
        raise
    except Exception as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(exit_code_for(e)) from e


def get_app_settings() -> AppSettings:
    from CXq_rank.config.loader import get_settings

    return get_settings()


def load_config(
    config: Path | None,
    seed: int | None,
    out: Path | None,
    overrides: list[str] | None,
    settings: AppSettings,
) -> RunConfig:
    return load_run_config(
        path=config,
        overrides=overrides,
        seed=seed,
        output_dir=out,
        default_output_dir=settings.storage.runs_root / "default",
    )
