"""Multilayer perceptron scorer trained by explicit backpropagation.

Parameters live in one flat float64 vector. Layout, layer-major:
each hidden layer's weights (fan_in x fan_out, row-major) then its biases,
then the score head (last_width weights, 1 bias), then the beta head
(last_width weights, 1 bias). Every layer exposes views into the flat vector,
so optimizers, clipping, checkpoints and finite-difference checks all work on
the vector directly.

The pairwise preference is tied to the scorer, gamma(a, b) =
sigmoid(f(a) - f(b)), which makes it exactly antisymmetric. Beta is a
separate sigmoid head on the shared trunk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class ModelError(Exception):
    """Base exception for scorer failures."""


class DimensionMismatchError(ModelError):
    pass


class StaleForwardError(ModelError):
    """Backward pass requested against a forward record from other parameters."""


class DivergenceError(ModelError):
    """Non-finite gradient or loss."""


class MlpSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    input_dim: int = Field(ge=1)
    hidden: tuple[int, ...] = (64, 32)
    init_seed: int = 0
    activation: Literal["elu"] = "elu"
    init_scale: float = Field(
        default=1.0, gt=0.0, description="Multiplier on the Glorot uniform limit"
    )

    @field_validator("hidden")
    @classmethod
    def _positive_widths(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v or any(w < 1 for w in v):
            raise ValueError(f"hidden widths must be a nonempty list of positive ints, got {v}")
        return v

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) of every weight matrix, heads included."""
        widths = (self.input_dim, *self.hidden)
        shapes = list(zip(widths[:-1], widths[1:], strict=True))
        return [*shapes, (self.hidden[-1], 1), (self.hidden[-1], 1)]

    @property
    def n_params(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layer_shapes())


def sigmoid(x: np.ndarray | float) -> np.ndarray:
    """Logistic function, stable at both tails.

    For ``x >= 0`` it evaluates ``1/(1+exp(-x))`` and for ``x < 0`` returns
    ``1 - sigmoid(-x)``, so ``sigmoid(x) + sigmoid(-x) == 1`` holds exactly in
    floating point (the subtraction from 1 of a value in [0.5, 1] is exact).
    """
    x = np.asarray(x, dtype=np.float64)
    pos = 1.0 / (1.0 + np.exp(-np.abs(x)))
    return np.where(x >= 0, pos, 1.0 - pos)


def elu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def elu_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


@dataclass(frozen=True)
class ForwardRecord:
    """Activations of one batch forward pass, needed by :meth:`Ranker.backprop`."""

    version: int
    inputs: np.ndarray
    pre_activations: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]
    scores: np.ndarray
    beta_logits: np.ndarray

    @property
    def beta(self) -> np.ndarray:
        return sigmoid(self.beta_logits)


class Ranker:
    """MLP scorer ``f`` with tied gamma head and a separate beta head.

    ``version`` increases on every parameter update; forward records carry the
    version they were computed under and are rejected by ``backprop`` once the
    parameters have moved.
    """

    def __init__(self, spec: MlpSpec, params: np.ndarray | None = None) -> None:
        self.spec = spec
        if params is None:
            params = self._glorot_init(spec)
        params = np.array(params, dtype=np.float64)
        if params.shape != (spec.n_params,):
            raise DimensionMismatchError(
                f"expected {spec.n_params} parameters, got {params.shape}"
            )
        self.params = params
        self.version = 0
        self._bind_views()

    @staticmethod
    def _glorot_init(spec: MlpSpec) -> np.ndarray:
        rng = np.random.default_rng(spec.init_seed)
        chunks = []
        for fan_in, fan_out in spec.layer_shapes():
            limit = spec.init_scale * np.sqrt(6.0 / (fan_in + fan_out))
            chunks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
            chunks.append(np.zeros(fan_out))
        return np.concatenate(chunks)

    def _bind_views(self) -> None:
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        offset = 0
        for fan_in, fan_out in self.spec.layer_shapes():
            size = fan_in * fan_out
            self.weights.append(self.params[offset : offset + size].reshape(fan_in, fan_out))
            offset += size
            self.biases.append(self.params[offset : offset + fan_out])
            offset += fan_out

    # heads are the last two layers
    @property
    def score_head(self) -> tuple[np.ndarray, np.ndarray]:
        return self.weights[-2], self.biases[-2]

    @property
    def beta_head(self) -> tuple[np.ndarray, np.ndarray]:
        return self.weights[-1], self.biases[-1]

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise DimensionMismatchError(
                f"expected features of width {self.spec.input_dim}, got shape {x.shape}"
            )
        return x

    def forward_batch(self, x: np.ndarray) -> ForwardRecord:
        """Score a (n, input_dim) batch and keep what backprop needs."""
        a = self._check_input(x)
        pre: list[np.ndarray] = []
        acts: list[np.ndarray] = []
        for w, b in zip(self.weights[:-2], self.biases[:-2], strict=True):
            z = a @ w + b
            a = elu(z)
            pre.append(z)
            acts.append(a)
        w_s, b_s = self.score_head
        w_b, b_b = self.beta_head
        return ForwardRecord(
            version=self.version,
            inputs=np.asarray(x, dtype=np.float64),
            pre_activations=tuple(pre),
            activations=tuple(acts),
            scores=(a @ w_s + b_s)[:, 0],
            beta_logits=(a @ w_b + b_b)[:, 0],
        )

    def score(self, x: np.ndarray) -> np.ndarray:
        return self.forward_batch(x).scores

    def forward(self, features: np.ndarray) -> float:
        """Score of one feature vector."""
        features = np.asarray(features, dtype=np.float64)
        if features.shape != (self.spec.input_dim,):
            raise DimensionMismatchError(
                f"expected {self.spec.input_dim} features, got shape {features.shape}"
            )
        return float(self.score(features[None, :])[0])

    def gamma(self, feat_i: np.ndarray, feat_j: np.ndarray) -> float:
        """P(item i preferred to item j) = sigmoid(f(i) - f(j))."""
        feat_i = np.asarray(feat_i, dtype=np.float64)
        feat_j = np.asarray(feat_j, dtype=np.float64)
        if feat_i.shape != feat_j.shape:
            raise DimensionMismatchError(f"pair shapes differ: {feat_i.shape} vs {feat_j.shape}")
        return float(sigmoid(self.forward(feat_i) - self.forward(feat_j)))

    def beta(self, features: np.ndarray) -> float:
        features = np.asarray(features, dtype=np.float64)
        if features.shape != (self.spec.input_dim,):
            raise DimensionMismatchError(
                f"expected {self.spec.input_dim} features, got shape {features.shape}"
            )
        return float(self.forward_batch(features[None, :]).beta[0])

    def backprop(
        self,
        record: ForwardRecord | None,
        d_scores: np.ndarray,
        d_beta_logits: np.ndarray | None = None,
    ) -> np.ndarray:
        """Flat parameter gradient given upstream gradients on scores and beta logits."""
        if record is None:
            raise StaleForwardError("no forward record")
        if record.version != self.version:
            raise StaleForwardError(
                f"forward record from version {record.version}, parameters at {self.version}"
            )
        n = record.inputs.shape[0]
        d_scores = np.asarray(d_scores, dtype=np.float64).reshape(n)
        d_beta = (
            np.zeros(n) if d_beta_logits is None
            else np.asarray(d_beta_logits, dtype=np.float64).reshape(n)
        )

        grads = [np.zeros_like(w) for w in self.weights]
        grad_b = [np.zeros_like(b) for b in self.biases]
        trunk_out = record.activations[-1]
        w_s, _ = self.score_head
        w_b, _ = self.beta_head

        grads[-2] = trunk_out.T @ d_scores[:, None]
        grad_b[-2] = np.array([d_scores.sum()])
        grads[-1] = trunk_out.T @ d_beta[:, None]
        grad_b[-1] = np.array([d_beta.sum()])

        da = d_scores[:, None] @ w_s.T + d_beta[:, None] @ w_b.T
        n_hidden = len(self.spec.hidden)
        for layer in range(n_hidden - 1, -1, -1):
            dz = da * elu_grad(record.pre_activations[layer])
            below = record.inputs if layer == 0 else record.activations[layer - 1]
            grads[layer] = below.T @ dz
            grad_b[layer] = dz.sum(axis=0)
            da = dz @ self.weights[layer].T

        flat = []
        for gw, gb in zip(grads, grad_b, strict=True):
            flat.append(gw.ravel())
            flat.append(gb)
        return np.concatenate(flat)

    def apply_update(self, delta: np.ndarray) -> None:
        """In-place ``params += delta``; bumps the version."""
        self.params += delta
        self.version += 1

    def set_params(self, params: np.ndarray) -> None:
        params = np.asarray(params, dtype=np.float64)
        if params.shape != self.params.shape:
            raise DimensionMismatchError(f"expected {self.params.shape}, got {params.shape}")
        self.params[:] = params
        self.version += 1

    def snapshot(self) -> Ranker:
        """Independent copy; safe to score from while this instance keeps training."""
        return Ranker(self.spec, self.params.copy())
