"""Click, dwell-time and synthesized-label sampling for one presented list.

Clicks follow a position-based model: an item at position ``i`` with grade
``y`` is clicked with probability ``(1/i)**eta * (eps + (1-eps)(2**y-1)/15)``.
A clicked item accrues dwell time ``max(0, delta_i * omega)`` where
``delta_i ~ N(2/sqrt(i+2), 0.4/sqrt(i+2))`` is the positional dwell bias and
``omega ~ N(eps + (1-eps)y, (sqrt(y)+eps)/(y_max+2))`` the relevance-driven part.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from CXq_rank.letor.models import MAX_GRADE, Query
from CXq_rank.simulation.models import (
    N_ACTION_CHANNELS,
    CombineKind,
    CombineSpec,
    PresentationPolicy,
    Session,
    SimConfig,
    SimulationError,
)
from CXq_rank.utils.rng import derive_rng

Scorer = Callable[[np.ndarray], np.ndarray]


def click_propensity(position: int, eta: float) -> float:
    """Examination probability ``(1/position)**eta``."""
    if position < 1:
        raise SimulationError(f"position must be >= 1, got {position}")
    return float((1.0 / position) ** eta)


def click_relevance_prob(grade: int, noise_eps: float) -> float:
    """Click probability of an examined item with the given grade."""
    if not 0 <= grade <= MAX_GRADE:
        raise SimulationError(f"grade {grade} outside [0, {MAX_GRADE}]")
    return noise_eps + (1.0 - noise_eps) * (2.0**grade - 1.0) / (2.0**MAX_GRADE - 1.0)


def combine(clicks: np.ndarray, dwell: np.ndarray, spec: CombineSpec) -> np.ndarray:
    """Merge the action channels into synthesized labels."""
    clicks = np.asarray(clicks, dtype=np.float64)
    dwell = np.asarray(dwell, dtype=np.float64)
    if clicks.shape != dwell.shape:
        raise SimulationError(f"clicks {clicks.shape} and dwell {dwell.shape} differ in shape")
    if len(spec.weights) != N_ACTION_CHANNELS:
        raise SimulationError(
            f"{len(spec.weights)} weights for {N_ACTION_CHANNELS} action channels"
        )
    w_click, w_dwell = spec.weights
    if spec.kind == CombineKind.WEIGHTED_SUM:
        return w_click * clicks + w_dwell * dwell
    # numpy already gives 0**0 == 1
    return np.power(clicks, w_click) * np.power(dwell, w_dwell)


def initial_ranking(
    query: Query,
    policy: PresentationPolicy,
    scorer: Scorer | None = None,
    seed: int | None = None,
) -> np.ndarray:
    """Presented order of a query's documents as 0-based ``doc_index`` values."""
    if policy == PresentationPolicy.BY_GRADE_DESC:
        return np.argsort(-query.grades, kind="stable")
    if policy == PresentationPolicy.BY_SCORE:
        if scorer is None:
            raise SimulationError("by_score presentation needs a scorer")
        scores = np.asarray(scorer(query.feature_matrix), dtype=np.float64)
        return np.argsort(-scores, kind="stable")
    if seed is None:
        raise SimulationError("random presentation needs a seed")
    return derive_rng(seed, "presentation", query.qid).permutation(len(query))


def sample_session(
    query: Query,
    ranking: np.ndarray,
    cfg: SimConfig,
    rng: np.random.Generator,
    session_id: int = 0,
) -> Session:
    """Simulate one user session over ``ranking`` (already cut to the list size)."""
    ranking = np.asarray(ranking, dtype=np.int64)
    n = min(cfg.list_size, len(query))
    if ranking.shape != (n,) or len(np.unique(ranking)) != n:
        raise SimulationError(f"qid {query.qid}: ranking must hold {n} distinct doc indices")
    if ranking.min() < 0 or ranking.max() >= len(query):
        raise SimulationError(f"qid {query.qid}: ranking refers to unknown documents")

    eps = cfg.noise_eps
    grades = query.grades[ranking].astype(np.float64)
    positions = np.arange(1, n + 1, dtype=np.float64)

    examine = (1.0 / positions) ** cfg.eta
    attract = eps + (1.0 - eps) * (2.0**grades - 1.0) / (2.0**MAX_GRADE - 1.0)

    # draws are taken for every position so the stream layout never depends on outcomes
    u = rng.random(n)
    scale = np.sqrt(positions + 2.0)
    delta = rng.normal(2.0 / scale, 0.4 / scale)
    omega = rng.normal(eps + (1.0 - eps) * grades, (np.sqrt(grades) + eps) / (MAX_GRADE + 2.0))

    clicks = (u < examine * attract).astype(np.int64)
    dwell = np.where(clicks == 1, np.maximum(0.0, delta * omega), 0.0)
    synth = combine(clicks, dwell, cfg.combine)

    return Session(
        qid=query.qid,
        ranked_docs=ranking,
        clicks=clicks,
        dwell=dwell,
        synth=synth,
        session_id=session_id,
    )
