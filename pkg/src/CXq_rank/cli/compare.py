"""CLI command comparing evaluation reports across run directories."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from typing_extensions import Annotated

from CXq_rank.cli.common import cli_errors, get_app_settings
from CXq_rank.pipeline.compare import compare_runs, comparison_table

console = Console()


def compare_cmd(
    run_dirs: Annotated[list[Path], typer.Argument(help="Run directories to compare")],
    metric: Annotated[str, typer.Option("--metric", "-m", help="'ndcg' or 'arp'")] = "ndcg",
    cutoff: Annotated[int, typer.Option("--cutoff", "-k", help="Metric cutoff (0 for arp)")] = 5,
    csv_out: Annotated[
        Optional[Path], typer.Option("--csv", help="Also write the comparison as CSV")
    ] = None,
) -> None:
    """Mean and sample std of a metric per method; runs must share the test split."""
    with cli_errors():
        settings = get_app_settings()
        summary = compare_runs(
            run_dirs, metric=metric, cutoff=cutoff, report_name=settings.storage.report_filename
        )
    console.print(comparison_table(summary, metric=metric, cutoff=cutoff))
    if csv_out:
        summary.write_csv(csv_out)
        typer.echo(f"Exported {len(summary)} rows to {csv_out}")
