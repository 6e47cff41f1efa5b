"""Brute-force enumeration of the pairwise trust-bias click model.

Sixteen raw hidden states ``(e_i, e_j, r_i > r_j, r_i > 0)`` times two pair
outcomes. This is the reference every closed form in
:mod:`CXq_rank.estimation.posteriors` is checked against; training code never
calls it.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from CXq_rank.estimation.bias_params import EstimationError, ZeroProbabilityEventError
from CXq_rank.estimation.pairs import ObservedEvent
from CXq_rank.estimation.posteriors import PairPosterior, coupled_mass
from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)


class InvalidPairModelError(EstimationError):
    pass


class PairOutcome(str, Enum):
    POSITIVE = "positive"  # c_i > c_j
    NON_POSITIVE = "non_positive"


class HiddenState(NamedTuple):
    e_i: int
    e_j: int
    rel_pair: bool  # r_i > r_j
    rel_i: bool  # r_i > 0


ALL_STATES: tuple[HiddenState, ...] = tuple(
    HiddenState(e_i, e_j, rel_pair, rel_i)
    for e_i, e_j, rel_pair, rel_i in itertools.product((0, 1), (0, 1), (False, True), (False, True))
)


@dataclass(frozen=True)
class PairModel:
    theta_i: float
    theta_j: float
    eps_plus: float
    eps_minus: float
    gamma: float
    beta_i: float
    theta_j_minus: float | None = None

    def __post_init__(self) -> None:
        for name in ("theta_i", "theta_j", "eps_plus", "eps_minus", "gamma", "beta_i"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidPairModelError(f"{name}={value} outside [0, 1]")
        if self.theta_j_minus is not None and not 0.0 <= self.theta_j_minus <= 1.0:
            raise InvalidPairModelError(f"theta_j_minus={self.theta_j_minus} outside [0, 1]")
        if not self.eps_minus < self.eps_plus:
            raise InvalidPairModelError(
                f"need eps_minus < eps_plus, got {self.eps_minus} >= {self.eps_plus}"
            )

    @property
    def lower_prior(self) -> float:
        return self.theta_j if self.theta_j_minus is None else self.theta_j_minus


def relevance_joint(gamma: float, beta: float) -> dict[tuple[bool, bool], float]:
    """Joint of ``(r_i > r_j, r_i > 0)`` under the maximal coupling."""
    if gamma > beta:
        logger.warning("relevance_coupling_clamped", gamma=gamma, beta=beta)
    both = float(coupled_mass(gamma, beta))
    return {
        (True, True): both,
        (True, False): gamma - both,
        (False, True): beta - both,
        (False, False): 1.0 - gamma - beta + both,
    }


def _positive_given(state: HiddenState, model: PairModel) -> float:
    if state.e_i == 0:
        return 0.0
    if state.e_j == 0:
        return 1.0 if state.rel_i else 0.0
    return model.eps_plus if state.rel_pair else model.eps_minus


def joint_table(
    model: PairModel,
    lower_zero: bool = False,
) -> dict[tuple[HiddenState, PairOutcome], float]:
    """``P(state, outcome)`` over all 32 cells.

    With ``lower_zero`` the examination prior of item j is ``theta_j_minus``.
    """
    theta_j = model.lower_prior if lower_zero else model.theta_j
    rel = relevance_joint(model.gamma, model.beta_i)
    table: dict[tuple[HiddenState, PairOutcome], float] = {}
    for state in ALL_STATES:
        prior = (
            (model.theta_i if state.e_i else 1.0 - model.theta_i)
            * (theta_j if state.e_j else 1.0 - theta_j)
            * rel[(state.rel_pair, state.rel_i)]
        )
        p_pos = _positive_given(state, model)
        table[(state, PairOutcome.POSITIVE)] = prior * p_pos
        table[(state, PairOutcome.NON_POSITIVE)] = prior * (1.0 - p_pos)
    return table


def marginal(model: PairModel, outcome: PairOutcome, lower_zero: bool = False) -> float:
    return sum(p for (_, o), p in joint_table(model, lower_zero).items() if o == outcome)


def posterior(model: PairModel, event: ObservedEvent) -> dict[HiddenState, float]:
    """``P(state | event)`` by conditioning the enumerated joint."""
    outcome = PairOutcome.POSITIVE if event.is_positive else PairOutcome.NON_POSITIVE
    table = joint_table(model, lower_zero=event == ObservedEvent.LOWER_ZERO)
    weights = {
        state: p
        for (state, o), p in table.items()
        if o == outcome and not (event == ObservedEvent.BOTH_POSITIVE and state.e_j == 0)
    }
    total = sum(weights.values())
    if total <= 0.0:
        raise ZeroProbabilityEventError(-1, -1, event.name)
    return {state: p / total for state, p in weights.items()}


def summarize(dist: dict[HiddenState, float]) -> PairPosterior:
    """Collapse a state distribution to the E-step's posterior fields."""

    def mass(pred: Callable[[HiddenState], object]) -> float:
        return float(sum(p for s, p in dist.items() if pred(s)))

    return PairPosterior(
        p_ee_rpos=mass(lambda s: s.e_i and s.e_j and s.rel_pair),
        p_ee_rneg=mass(lambda s: s.e_i and s.e_j and not s.rel_pair),
        p_e_only=mass(lambda s: s.e_i and not s.e_j),
        p_rest=mass(lambda s: not s.e_i),
        p_exam_i=mass(lambda s: s.e_i),
        p_exam_j=mass(lambda s: s.e_j),
        p_rel_i=mass(lambda s: s.rel_i),
        p_rel_pair=mass(lambda s: s.rel_pair),
    )


def oracle_posterior(model: PairModel, event: ObservedEvent) -> PairPosterior:
    return summarize(posterior(model, event))


@dataclass(frozen=True)
class PairDraws:
    """Hidden states and outcomes drawn for a batch of pairs."""

    e_i: np.ndarray
    e_j: np.ndarray
    rel_pair: np.ndarray
    rel_i: np.ndarray
    positive: np.ndarray


def sample_pair_outcomes(
    theta_i: np.ndarray,
    theta_j: np.ndarray,
    eps_plus: np.ndarray,
    eps_minus: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    rng: np.random.Generator,
) -> PairDraws:
    """Draw from the same generative model :func:`joint_table` enumerates.

    All draws are taken for every pair, so the stream layout does not depend on
    outcomes.
    """
    theta_i, theta_j, eps_plus, eps_minus, gamma, beta = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64) for a in (theta_i, theta_j, eps_plus, eps_minus, gamma, beta))
    )
    n = theta_i.shape[0]
    u = rng.random((4, n))
    e_i = u[0] < theta_i
    e_j = u[1] < theta_j
    both = coupled_mass(gamma, beta)
    # inverse-cdf over (T,T), (T,F), (F,T), (F,F)
    rel_pair = u[2] < gamma
    rel_i = np.where(rel_pair, u[2] < both, u[2] < gamma + beta - both)
    click_given_ee = np.where(rel_pair, eps_plus, eps_minus)
    positive = e_i & np.where(e_j, u[3] < click_given_ee, rel_i)
    return PairDraws(
        e_i=e_i.astype(np.int64),
        e_j=e_j.astype(np.int64),
        rel_pair=rel_pair,
        rel_i=rel_i,
        positive=positive,
    )
