"""Score a dataset with a frozen ranker and aggregate metrics."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from CXq_rank.evaluation.metrics import MetricError, arp, ndcg_at_k
from CXq_rank.evaluation.report import DEFAULT_CUTOFFS, EvalReport, QueryMetrics
from CXq_rank.letor.models import Dataset
from CXq_rank.model.mlp import Ranker
from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)

Scorer = Callable[[np.ndarray], np.ndarray]


def evaluate(
    ranker: Ranker | Scorer,
    dataset: Dataset,
    cutoffs: Sequence[int] = DEFAULT_CUTOFFS,
    per_query: bool = False,
) -> EvalReport:
    """Mean NDCG@k over queries with a relevant item, and mean ARP."""
    if len(dataset) == 0:
        raise MetricError("cannot evaluate an empty dataset")
    score = ranker.score if isinstance(ranker, Ranker) else ranker

    sums = {k: 0.0 for k in cutoffs}
    counted = 0
    arp_values: list[float] = []
    rows: list[QueryMetrics] = []
    for query in dataset.queries:
        scores = np.asarray(score(query.feature_matrix), dtype=np.float64)
        grades = query.grades
        values = {k: ndcg_at_k(scores, grades, k) for k in cutoffs}
        query_arp = arp(scores, grades)
        if all(v is not None for v in values.values()):
            counted += 1
            for k, v in values.items():
                sums[k] += v  # type: ignore[operator]
        if query_arp is not None:
            arp_values.append(query_arp)
        if per_query:
            rows.append(QueryMetrics(qid=query.qid, ndcg_at=values, arp=query_arp))

    report = EvalReport(
        ndcg_at={k: (sums[k] / counted if counted else 0.0) for k in cutoffs},
        arp=float(np.mean(arp_values)) if arp_values else None,
        n_queries=len(dataset),
        n_ndcg_skipped=len(dataset) - counted,
        n_arp_skipped=len(dataset) - len(arp_values),
        per_query=rows if per_query else None,
    )
    logger.info(
        "evaluation_done",
        queries=report.n_queries,
        skipped=report.n_ndcg_skipped,
        **{f"ndcg@{k}": round(v, 5) for k, v in report.ndcg_at.items()},
    )
    return report
