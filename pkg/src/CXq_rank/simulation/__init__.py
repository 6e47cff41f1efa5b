"""Biased user-feedback simulation: clicks, dwell time and synthesized labels."""

from CXq_rank.simulation.clicks import (
    click_propensity,
    click_relevance_prob,
    combine,
    initial_ranking,
    sample_session,
)
from CXq_rank.simulation.models import (
    CombineKind,
    CombineSpec,
    PresentationPolicy,
    Session,
    SimConfig,
    SimulationError,
)
from CXq_rank.simulation.sessions import simulate_dataset

__all__ = [
    "CombineKind",
    "CombineSpec",
    "PresentationPolicy",
    "Session",
    "SimConfig",
    "SimulationError",
    "click_propensity",
    "click_relevance_prob",
    "combine",
    "initial_ranking",
    "sample_session",
    "simulate_dataset",
]
