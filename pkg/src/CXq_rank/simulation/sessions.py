"""Session generation over a whole dataset."""

from __future__ import annotations

from CXq_rank.letor.models import Dataset
from CXq_rank.simulation.clicks import Scorer, initial_ranking, sample_session
from CXq_rank.simulation.models import Session, SimConfig
from CXq_rank.utils.logging import get_logger
from CXq_rank.utils.rng import derive_rng

logger = get_logger(__name__)


def simulate_dataset(
    dataset: Dataset,
    cfg: SimConfig,
    scorer: Scorer | None = None,
) -> list[Session]:
    """``cfg.sessions_per_query`` sessions per query against a fixed presented ranking.

    Session ``k`` of query ``q`` draws from the substream ``(cfg.seed, q, k)``,
    so the output does not depend on query order or on other queries.
    Session ids are assigned sequentially in dataset order.
    """
    sessions: list[Session] = []
    for query in dataset.queries:
        ranking = initial_ranking(query, cfg.policy, scorer=scorer, seed=cfg.seed)
        ranking = ranking[: min(cfg.list_size, len(query))]
        for counter in range(cfg.sessions_per_query):
            rng = derive_rng(cfg.seed, query.qid, counter)
            sessions.append(
                sample_session(query, ranking, cfg, rng, session_id=len(sessions))
            )

    clicks = sum(int(s.clicks.sum()) for s in sessions)
    shown = sum(s.size for s in sessions)
    logger.info(
        "sessions_simulated",
        queries=len(dataset),
        sessions=len(sessions),
        click_rate=round(clicks / shown, 4) if shown else 0.0,
    )
    return sessions
