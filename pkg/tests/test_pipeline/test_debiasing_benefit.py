"""Direction-of-improvement experiments on simulated continuous and click labels.

Each takes a few minutes on one core; run them with ``pytest -m slow``.
"""

from __future__ import annotations

from pathlib import Path
from statistics import mean

import pytest

from CXq_rank.config.settings import AppSettings
from CXq_rank.evaluation.report import EvalReport
from CXq_rank.pipeline.experiment import run_experiment
from CXq_rank.pipeline.run_config import validate_config

SEEDS = range(4)

# 2000 queries: ~1440 train, ~200 valid, ~360 test
PROTOCOL = {
    "data": {"n_queries": 2000, "docs_per_query": 10, "valid_fraction": 0.1, "test_fraction": 0.18},
    "sim": {"eta": 1.0, "noise_eps": 0.1, "list_size": 10},
    "em": {"epochs": 3},
    "model": {"hidden": [16]},
    "train": {"epochs": 8},
}


def _mean_ndcg5(root: Path, name: str, train: dict, sim: dict | None = None) -> float:
    values = []
    for seed in SEEDS:
        cfg = validate_config(
            {
                **PROTOCOL,
                "seed": seed,
                "output_dir": str(root / name / str(seed)),
                "sim": {**PROTOCOL["sim"], **(sim or {})},
                "train": {**PROTOCOL["train"], **train},
            }
        )
        run_dir = run_experiment(cfg, AppSettings())
        values.append(EvalReport.read(run_dir / "eval_report.tsv").ndcg_at[5])
    return mean(values)


@pytest.mark.slow
def test_continuous_labels_ordering(tmp_path: Path):
    upper = _mean_ndcg5(
        tmp_path, "upper", {"variant": "naive_pairwise", "label_source": "relevance_upper_bound"}
    )
    opt = _mean_ndcg5(tmp_path, "opt", {"variant": "opt"})
    lower = _mean_ndcg5(tmp_path, "lower", {"variant": "naive_pairwise"})
    assert upper > opt > lower
    assert opt - lower >= 0.01


@pytest.mark.slow
def test_click_labels_ordering(tmp_path: Path):
    clicks = {"combine": {"weights": [1.0, 0.0]}}
    opt = _mean_ndcg5(tmp_path, "opt", {"variant": "opt"}, clicks)
    pointwise = _mean_ndcg5(tmp_path, "ipw_pointwise", {"variant": "ipw_pointwise"}, clicks)
    lower = _mean_ndcg5(tmp_path, "lower", {"variant": "naive_pairwise"}, clicks)
    assert opt >= pointwise >= lower
