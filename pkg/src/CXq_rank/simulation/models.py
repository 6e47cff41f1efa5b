"""Simulation configuration and session records."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

# click, dwell time
N_ACTION_CHANNELS = 2


class SimulationError(Exception):
    """Base exception for simulation failures."""


class CombineKind(str, Enum):
    WEIGHTED_SUM = "weighted_sum"
    WEIGHTED_PRODUCT = "weighted_product"


class PresentationPolicy(str, Enum):
    BY_GRADE_DESC = "by_grade_desc"
    BY_SCORE = "by_score"
    RANDOM = "random"


class CombineSpec(BaseModel):
    """How user actions merge into one synthesized label."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: CombineKind = CombineKind.WEIGHTED_SUM
    weights: tuple[float, ...] = (1.0, 1.0)

    @field_validator("weights")
    @classmethod
    def _one_weight_per_channel(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if len(v) != N_ACTION_CHANNELS:
            raise ValueError(f"expected {N_ACTION_CHANNELS} weights (click, dwell), got {len(v)}")
        return v

    @property
    def categorical(self) -> bool:
        """True when the synthesized label is exactly the click label."""
        return self.kind == CombineKind.WEIGHTED_SUM and self.weights == (1.0, 0.0)


class SimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    eta: float = Field(default=1.0, ge=0.0, description="Position-bias severity exponent")
    noise_eps: float = Field(default=0.1, ge=0.0, lt=1.0, description="Click/dwell noise floor")
    list_size: int = Field(default=10, ge=2, description="Positions shown per session")
    sessions_per_query: int = Field(default=4, ge=1)
    seed: int = 0
    combine: CombineSpec = Field(default_factory=CombineSpec)
    policy: PresentationPolicy = PresentationPolicy.BY_GRADE_DESC


@dataclass(frozen=True, eq=False)
class Session:
    """One presentation of a ranked list; index k holds position k + 1."""

    qid: str
    ranked_docs: np.ndarray
    clicks: np.ndarray
    dwell: np.ndarray
    synth: np.ndarray
    session_id: int = 0

    def __post_init__(self) -> None:
        n = len(self.ranked_docs)
        if not (len(self.clicks) == len(self.dwell) == len(self.synth) == n):
            raise SimulationError(f"session for qid {self.qid}: ragged vectors")
        if np.any((self.clicks == 0) & (self.dwell != 0)):
            raise SimulationError(f"session for qid {self.qid}: dwell on an unclicked item")

    @property
    def size(self) -> int:
        return len(self.ranked_docs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Session):
            return NotImplemented
        return (
            self.qid == other.qid
            and self.session_id == other.session_id
            and np.array_equal(self.ranked_docs, other.ranked_docs)
            and np.array_equal(self.clicks, other.clicks)
            and np.array_equal(self.dwell, other.dwell)
            and np.array_equal(self.synth, other.synth)
        )

    def __hash__(self) -> int:
        return hash((self.qid, self.session_id, self.ranked_docs.tobytes()))
