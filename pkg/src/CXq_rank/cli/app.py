"""Root CLI application."""

from __future__ import annotations

import typer

from CXq_rank.cli.compare import compare_cmd
from CXq_rank.cli.stages import em_fit_cmd, evaluate_cmd, run_cmd, simulate_cmd, train_cmd

app = typer.Typer(
    name="cxq_rank",
    help="Unbiased pairwise learning-to-rank from biased click and dwell-time feedback.",
    no_args_is_help=True,
)

app.command("simulate", help="Simulate biased sessions")(simulate_cmd)
app.command("em-fit", help="Estimate position and trust bias by regression EM")(em_fit_cmd)
app.command("train", help="Train a ranker with the configured loss")(train_cmd)
app.command("evaluate", help="Evaluate a checkpoint on the test split")(evaluate_cmd)
app.command("run", help="Run the whole pipeline")(run_cmd)
app.command("compare", help="Compare runs over seeds and methods")(compare_cmd)


def main() -> None:
    from CXq_rank.config.loader import get_settings
    from CXq_rank.utils.logging import setup_logging

    settings = get_settings()
    setup_logging(settings.log_level, json_output=settings.log_json)
    app()
