"""Mean and sample standard deviation of a metric across run directories."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import polars as pl
from rich.table import Table

from CXq_rank.evaluation.report import REPORT_SCHEMA
from CXq_rank.storage.manifest import read_manifest
from CXq_rank.storage.paths import MANIFEST_NAME
from CXq_rank.storage.report_store import ReportStore
from CXq_rank.storage.tables import read_table
from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)

TEST_SPLIT_KEY = "split.test.sha256"


class ComparisonError(Exception):
    """Runs cannot be compared: missing reports or different test splits."""


def _run_frame(run_dir: Path, report_path: Path) -> tuple[pl.DataFrame, str]:
    manifest_path = run_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise ComparisonError(f"{run_dir}: no {MANIFEST_NAME}")
    manifest = read_manifest(manifest_path)
    split_hash = manifest.get(TEST_SPLIT_KEY)
    if split_hash is None:
        raise ComparisonError(f"{run_dir}: manifest has no test split hash")

    report = read_table(report_path, schema=REPORT_SCHEMA)
    frame = report.with_columns(
        pl.lit(str(run_dir)).alias("run"),
        pl.lit(str(manifest.get("variant", run_dir.name))).alias("method"),
    ).select("run", "method", "metric", "cutoff", "value")
    return frame, str(split_hash)


def compare_runs(
    run_dirs: Sequence[Path],
    metric: str = "ndcg",
    cutoff: int = 5,
    report_name: str = "eval_report.tsv",
) -> pl.DataFrame:
    """One row per method: ``method, n_runs, mean, std`` (``std`` with n - 1, null for a single run)."""
    if len(run_dirs) < 2:
        raise ComparisonError(f"need at least 2 runs to compare, got {len(run_dirs)}")

    frames = []
    hashes: dict[str, list[Path]] = {}
    for run_dir in run_dirs:
        report_path = run_dir / report_name
        if not report_path.exists():
            raise ComparisonError(f"{run_dir}: no evaluation report at {report_path.name}")
        frame, split_hash = _run_frame(run_dir, report_path)
        frames.append(frame)
        hashes.setdefault(split_hash, []).append(run_dir)

    if len(hashes) > 1:
        detail = "; ".join(f"{h[:12]}: {', '.join(str(d) for d in dirs)}" for h, dirs in hashes.items())
        raise ComparisonError(f"runs were evaluated on different test splits ({detail})")

    store = ReportStore()
    with store.connect():
        store.load(pl.concat(frames))
        summary = store.summary(metric, cutoff)
    if summary.is_empty():
        raise ComparisonError(f"no run reports {metric}@{cutoff}")
    logger.info("runs_compared", runs=len(run_dirs), methods=len(summary), metric=metric, cutoff=cutoff)
    return summary


def comparison_table(summary: pl.DataFrame, metric: str = "ndcg", cutoff: int = 5) -> Table:
    label = f"{metric.upper()}@{cutoff}" if cutoff else metric.upper()
    table = Table(title=f"Comparison: {label}", show_header=True, header_style="bold")
    table.add_column("Method", style="cyan")
    table.add_column("Runs", justify="right")
    table.add_column("Mean", justify="right", style="green")
    table.add_column("Std", justify="right")
    for method, n_runs, mean, std in summary.select("method", "n_runs", "mean", "std").iter_rows():
        table.add_row(method, str(n_runs), f"{mean:.4f}", "-" if std is None else f"{std:.4f}")
    return table
