"""Pipeline commands: one per stage plus the full run."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table
from typing_extensions import Annotated

from CXq_rank.cli.common import ConfigOpt, OutOpt, SeedOpt, SetOpt, cli_errors, get_app_settings, load_config
from CXq_rank.estimation.bias_params import BiasParams
from CXq_rank.evaluation.report import EvalReport
from CXq_rank.losses.registry import LossVariant
from CXq_rank.pipeline.compare import compare_runs, comparison_table
from CXq_rank.pipeline.experiment import ExperimentRunner, run_experiment, run_variants
from CXq_rank.pipeline.run_config import ConfigError
from CXq_rank.storage.paths import run_lock, run_paths

console = Console()


def _runner(
    config: Path | None, seed: int | None, out: Path | None, overrides: list[str] | None
) -> ExperimentRunner:
    settings = get_app_settings()
    cfg = load_config(config, seed, out, overrides, settings)
    return ExperimentRunner(cfg, settings)


def _params_table(params: BiasParams) -> Table:
    table = Table(title="Examination propensities", show_header=True, header_style="bold")
    table.add_column("Position", justify="right")
    table.add_column("theta", justify="right", style="green")
    table.add_column("theta-", justify="right")
    for k in range(params.n_positions):
        table.add_row(str(k + 1), f"{params.theta[k]:.4f}", f"{params.theta_minus[k]:.4f}")
    return table


def _parse_variants(raw: str) -> list[LossVariant]:
    variants = []
    for name in (v.strip() for v in raw.split(",")):
        if not name:
            continue
        try:
            variants.append(LossVariant(name))
        except ValueError as e:
            choices = ", ".join(v.value for v in LossVariant)
            raise ConfigError(f"unknown loss variant {name!r} (choose from {choices})") from e
    if not variants:
        raise ConfigError("--variants names no variant")
    return variants


def simulate_cmd(
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    overrides: SetOpt = None,
) -> None:
    """Simulate logged sessions over the training queries."""
    with cli_errors():
        runner = _runner(config, seed, out, overrides)
        with run_lock(runner.paths):
            runner.prepare()
            sessions = runner.simulate()
            runner.write_manifest()
    typer.echo(f"{len(sessions)} sessions -> {runner.paths.sessions}")


def em_fit_cmd(
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    overrides: SetOpt = None,
) -> None:
    """Estimate bias parameters from the run's sessions."""
    with cli_errors():
        runner = _runner(config, seed, out, overrides)
        with run_lock(runner.paths):
            runner.prepare()
            params = runner.estimate()
            runner.write_manifest()
    if params is None:
        typer.echo(f"{runner.cfg.train.variant.value} needs no bias parameters")
        return
    console.print(_params_table(params))
    typer.echo(f"Bias parameters -> {runner.paths.bias_params}")


def train_cmd(
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    overrides: SetOpt = None,
) -> None:
    """Train the ranker from the run's sessions and bias parameters."""
    with cli_errors():
        runner = _runner(config, seed, out, overrides)
        with run_lock(runner.paths):
            runner.prepare()
            checkpoint = runner.train()
            runner.write_manifest()
    typer.echo(f"Checkpoint -> {checkpoint}")


def evaluate_cmd(
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    overrides: SetOpt = None,
) -> None:
    """Evaluate the run's checkpoint on the test split."""
    with cli_errors():
        runner = _runner(config, seed, out, overrides)
        with run_lock(runner.paths):
            runner.prepare()
            report = runner.evaluate()
            runner.write_manifest()
    console.print(report.to_table(title=f"Evaluation: {runner.cfg.train.variant.value}"))


def run_cmd(
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    overrides: SetOpt = None,
    variants: Annotated[
        Optional[str],
        typer.Option("--variants", help="Comma-separated loss variants, one run directory each"),
    ] = None,
    cutoff: Annotated[int, typer.Option("--cutoff", help="NDCG cutoff of the comparison table")] = 5,
) -> None:
    """Run the full pipeline: simulate, estimate, train, evaluate."""
    with cli_errors():
        settings = get_app_settings()
        cfg = load_config(config, seed, out, overrides, settings)
        if variants is None:
            run_dir = run_experiment(cfg, settings)
            report = EvalReport.read(run_paths(settings.storage, run_dir).report)
            console.print(report.to_table(title=f"Evaluation: {cfg.train.variant.value}"))
            typer.echo(f"Run directory: {run_dir}")
            return

        run_dirs = run_variants(cfg, _parse_variants(variants), settings)
        for run_dir in run_dirs:
            typer.echo(f"Run directory: {run_dir}")
        if len(run_dirs) >= 2:
            summary = compare_runs(
                run_dirs, metric="ndcg", cutoff=cutoff, report_name=settings.storage.report_filename
            )
            console.print(comparison_table(summary, metric="ndcg", cutoff=cutoff))
