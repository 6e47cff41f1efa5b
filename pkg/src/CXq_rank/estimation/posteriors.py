"""Closed-form E-step for the pairwise trust-bias click model.

Hidden per pair: examinations ``e_i, e_j``, the preference ``r_i > r_j``
(prior ``gamma``) and ``r_i > 0`` (prior ``beta``). The two relevance events
are joined by the maximal coupling ``P(r_i > r_j, r_i > 0) = min(gamma, beta)``.
Observed: whether ``c_i > c_j``. Given ``e_i = e_j = 1`` the pair is positive
with probability ``eps+`` when ``r_i > r_j`` and ``eps-`` otherwise; given
``e_i = 1, e_j = 0`` it is positive iff ``r_i > 0``; given ``e_i = 0`` never.

All functions are vectorized over pairs and accept scalars.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from CXq_rank.estimation.bias_params import BiasParams, ZeroProbabilityEventError
from CXq_rank.estimation.pairs import ObservedEvent, PairBatch, PairObservation, event_codes
from CXq_rank.model.mlp import ForwardRecord, Ranker, sigmoid

Prob = np.ndarray | float


def _safe_div(num: Prob, den: Prob) -> np.ndarray:
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros(np.broadcast(num, den).shape), where=den > 0)


def coupled_mass(gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``P(r_i > r_j, r_i > 0)``."""
    return np.minimum(gamma, beta)


def pair_click_probability(
    theta_i: Prob, theta_j: Prob, eps_plus: Prob, eps_minus: Prob, gamma: Prob, beta: Prob
) -> Prob:
    """``P(c_i > c_j)``: examined-both term plus upper-only term."""
    both = theta_i * theta_j * (eps_plus * gamma + eps_minus * (1.0 - gamma))
    return both + theta_i * (1.0 - theta_j) * beta


def trust_posterior(eps_plus: Prob, eps_minus: Prob, gamma: Prob) -> Prob:
    """``m_ij = P(r_i > r_j | c_i > c_j, e_i = e_j = 1)``."""
    num = eps_plus * gamma
    return _safe_div(num, num + eps_minus * (1.0 - gamma))


def lower_exam_posterior(
    theta_i: Prob, theta_j_minus: Prob, eps_plus: Prob, eps_minus: Prob, gamma: Prob, beta: Prob
) -> Prob:
    """``h_ij = P(e_j = 1 | c_i > c_j = 0)`` with ``theta_minus_j`` as the prior of ``e_j``."""
    num = theta_i * theta_j_minus * (eps_plus * gamma + eps_minus * (1.0 - gamma))
    return _safe_div(num, num + theta_i * (1.0 - theta_j_minus) * beta)


def pbm_lower_exam_posterior(theta_i: Prob, theta_j_minus: Prob, gamma: Prob, beta: Prob) -> Prob:
    """:func:`lower_exam_posterior` without trust bias (``eps+ = 1``, ``eps- = 0``)."""
    num = theta_i * theta_j_minus * gamma
    return _safe_div(num, num + theta_i * (1.0 - theta_j_minus) * beta)


def true_positive_posterior(
    theta_i: Prob, theta_j: Prob, eps_plus: Prob, eps_minus: Prob, gamma: Prob, beta: Prob
) -> Prob:
    """``P(e_i = 1, e_j = 1, r_i > r_j | c_i > c_j)``."""
    num = theta_i * theta_j * eps_plus * gamma
    return _safe_div(num, pair_click_probability(theta_i, theta_j, eps_plus, eps_minus, gamma, beta))


@dataclass(frozen=True)
class PairPosterior:
    """Posterior of one pair.

    ``p_ee_rpos + p_ee_rneg + p_e_only + p_rest == 1`` where ``p_e_only`` is
    ``P(e_i = 1, e_j = 0)`` and ``p_rest`` is ``P(e_i = 0)``.
    """

    p_ee_rpos: float
    p_ee_rneg: float
    p_e_only: float
    p_rest: float
    p_exam_i: float
    p_exam_j: float
    p_rel_i: float
    p_rel_pair: float


@dataclass(frozen=True)
class PairPosteriors:
    """Column arrays of :class:`PairPosterior`, one entry per pair."""

    p_ee_rpos: np.ndarray
    p_ee_rneg: np.ndarray
    p_e_only: np.ndarray
    p_rest: np.ndarray
    p_exam_i: np.ndarray
    p_exam_j: np.ndarray
    p_rel_i: np.ndarray
    p_rel_pair: np.ndarray

    def __len__(self) -> int:
        return len(self.p_ee_rpos)

    def row(self, k: int) -> PairPosterior:
        return PairPosterior(**{f.name: float(getattr(self, f.name)[k]) for f in fields(self)})


def posterior_arrays(
    events: np.ndarray,
    theta_i: np.ndarray,
    theta_j: np.ndarray,
    theta_j_minus: np.ndarray,
    eps_plus: np.ndarray,
    eps_minus: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    pos_i: np.ndarray | None = None,
    pos_j: np.ndarray | None = None,
) -> PairPosteriors:
    """Posteriors for each pair conditioned on its :class:`ObservedEvent` code.

    Raises :class:`ZeroProbabilityEventError` naming the first pair whose
    event is impossible under the given parameters.
    """
    events = np.asarray(events)
    arrays = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64) for a in (theta_i, theta_j, theta_j_minus, eps_plus, eps_minus, gamma, beta)),
        np.zeros(len(events)),
    )
    ti, tj, tjm, ep, em, g, b, _ = arrays
    m = coupled_mass(g, b)
    lower = events == ObservedEvent.LOWER_ZERO
    positive = events != ObservedEvent.NON_POSITIVE
    both_pos = events == ObservedEvent.BOTH_POSITIVE

    tj_eff = np.where(lower, tjm, tj)
    # c_i > c_j
    a_pos = ti * tj_eff * ep * g
    b_pos = ti * tj_eff * em * (1.0 - g)
    c_pos = np.where(both_pos, 0.0, ti * (1.0 - tj_eff) * b)
    rel_i_ee_pos = ti * tj_eff * (ep * m + em * (b - m))
    # not c_i > c_j
    a_neg = ti * tj * (1.0 - ep) * g
    b_neg = ti * tj * (1.0 - em) * (1.0 - g)
    c_neg = ti * (1.0 - tj) * (1.0 - b)
    d_neg = 1.0 - ti

    a = np.where(positive, a_pos, a_neg)
    bb = np.where(positive, b_pos, b_neg)
    c = np.where(positive, c_pos, c_neg)
    d = np.where(positive, 0.0, d_neg)
    z = a + bb + c + d

    impossible = ~(z > 0.0)
    if impossible.any():
        k = int(np.nonzero(impossible)[0][0])
        raise ZeroProbabilityEventError(
            int(pos_i[k]) if pos_i is not None else -1,
            int(pos_j[k]) if pos_j is not None else -1,
            ObservedEvent(int(events[k])).name,
        )

    inv = 1.0 / z
    p_exam_i = np.where(positive, 1.0, (a + bb + c) * inv)
    p_exam_j = np.where(positive, (a + bb) * inv, (a + bb + d_neg * tj) * inv)

    rel_i_pos = (rel_i_ee_pos + c) * inv
    rel_i_neg = (ti * tj * ((1.0 - ep) * m + (1.0 - em) * (b - m)) + d_neg * b) * inv
    p_rel_i = np.where(positive, rel_i_pos, rel_i_neg)

    # on the upper-only branch r_i > 0 is observed (positive) or excluded (non-positive)
    rpos_given_rel = _safe_div(m, b)
    rpos_given_not_rel = ti * (1.0 - tj) * (g - m)
    p_rel_pair = np.where(
        positive,
        (a + c * rpos_given_rel) * inv,
        (a + rpos_given_not_rel + d_neg * g) * inv,
    )
    return PairPosteriors(
        p_ee_rpos=a * inv,
        p_ee_rneg=bb * inv,
        p_e_only=c * inv,
        p_rest=d * inv,
        p_exam_i=p_exam_i,
        p_exam_j=p_exam_j,
        p_rel_i=np.clip(p_rel_i, 0.0, 1.0),
        p_rel_pair=np.clip(p_rel_pair, 0.0, 1.0),
    )


def gather_params(params: BiasParams, pos_i: np.ndarray, pos_j: np.ndarray) -> tuple[np.ndarray, ...]:
    """Per-pair ``theta_i, theta_j, theta_minus_j, eps+, eps-`` for 1-based positions."""
    a, b = pos_i - 1, pos_j - 1
    return (
        params.theta[a],
        params.theta[b],
        params.theta_minus[b],
        params.eps_plus[a, b],
        params.eps_minus[a, b],
    )


def batch_relevance(batch: PairBatch, record: ForwardRecord) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair ``gamma`` and ``beta_i`` from a forward pass over the batch's items."""
    gamma = sigmoid(record.scores[batch.idx_i] - record.scores[batch.idx_j])
    return gamma, record.beta[batch.idx_i]


def e_step_batch(
    batch: PairBatch,
    params: BiasParams,
    record: ForwardRecord,
    bucketed: bool = True,
) -> PairPosteriors:
    pos_i, pos_j = batch.pos_i, batch.pos_j
    gamma, beta = batch_relevance(batch, record)
    return posterior_arrays(
        batch.events(bucketed),
        *gather_params(params, pos_i, pos_j),
        gamma,
        beta,
        pos_i=pos_i,
        pos_j=pos_j,
    )


def e_step(obs: PairObservation, params: BiasParams, ranker: Ranker) -> PairPosterior:
    """Posterior of a single observed pair under the bucket's event."""
    gamma = ranker.gamma(obs.feat_i, obs.feat_j)
    beta = ranker.beta(obs.feat_i)
    events = event_codes(np.array([int(obs.bucket)]))
    pos_i, pos_j = np.array([obs.pos_i]), np.array([obs.pos_j])
    return posterior_arrays(
        events, *gather_params(params, pos_i, pos_j), gamma, beta, pos_i=pos_i, pos_j=pos_j
    ).row(0)


def pair_log_likelihood(
    batch: PairBatch,
    params: BiasParams,
    record: ForwardRecord,
) -> float:
    """Sum over pairs of ``log P(observed outcome)`` with the ``theta_j`` prior."""
    gamma, beta = batch_relevance(batch, record)
    ti, tj, _, ep, em = gather_params(params, batch.pos_i, batch.pos_j)
    p = pair_click_probability(ti, tj, ep, em, gamma, beta)
    positive = batch.c_i > batch.c_j
    with np.errstate(divide="ignore"):
        return float(np.sum(np.where(positive, np.log(p), np.log1p(-p))))
