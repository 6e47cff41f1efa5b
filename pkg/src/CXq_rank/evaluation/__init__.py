"""Ranking evaluation: NDCG@k and ARP against held-out relevance."""

from CXq_rank.evaluation.metrics import MetricError, arp, ndcg_at_k
from CXq_rank.evaluation.report import DEFAULT_CUTOFFS, EvalReport, QueryMetrics
from CXq_rank.evaluation.runner import evaluate

__all__ = [
    "DEFAULT_CUTOFFS",
    "EvalReport",
    "MetricError",
    "QueryMetrics",
    "arp",
    "evaluate",
    "ndcg_at_k",
]
