"""Position bias parameters: examination propensities and trust-bias click rates.

``theta[k]`` and ``theta_minus[k]`` belong to position ``k + 1``;
``eps_plus[a, b]`` and ``eps_minus[a, b]`` to the ordered position pair
``(a + 1, b + 1)``. Diagonal entries of the eps matrices are carried but unused.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import polars as pl

from CXq_rank.storage.tables import read_table, write_table
from CXq_rank.utils.logging import get_logger

logger = get_logger(__name__)

DEFAULT_FLOOR = 1e-4

PARAM_TABLE_SCHEMA = {
    "param": pl.Utf8,
    "i": pl.Int64,
    "j": pl.Int64,
    "value": pl.Float64,
}


class EstimationError(Exception):
    """Base exception for bias estimation failures."""


class BiasParamsError(EstimationError):
    pass


class ZeroProbabilityEventError(EstimationError):
    """An observed pair outcome has zero probability under the current parameters."""

    def __init__(self, pos_i: int, pos_j: int, event: str) -> None:
        super().__init__(f"{event} at positions ({pos_i}, {pos_j}) has zero probability")
        self.pos_i = pos_i
        self.pos_j = pos_j
        self.event = event


def _readonly(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BiasParams:
    """Immutable snapshot; every update produces a new instance."""

    theta: np.ndarray
    theta_minus: np.ndarray
    eps_plus: np.ndarray
    eps_minus: np.ndarray

    def __post_init__(self) -> None:
        for name in ("theta", "theta_minus", "eps_plus", "eps_minus"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        n = self.theta.shape[0] if self.theta.ndim == 1 else -1
        if n < 1 or self.theta_minus.shape != (n,):
            raise BiasParamsError(
                f"theta {self.theta.shape} and theta_minus {self.theta_minus.shape} must be equal-length vectors"
            )
        if self.eps_plus.shape != (n, n) or self.eps_minus.shape != (n, n):
            raise BiasParamsError(f"eps matrices must be {n}x{n}")
        for name in ("theta", "theta_minus", "eps_plus", "eps_minus"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise BiasParamsError(f"{name} has non-finite entries")

    @property
    def n_positions(self) -> int:
        return int(self.theta.shape[0])

    def off_diagonal(self) -> np.ndarray:
        return ~np.eye(self.n_positions, dtype=bool)

    def satisfies_constraints(self) -> bool:
        """``0 < theta <= 1``, ``0 <= theta_minus <= 1`` and ``0 < eps- < eps+ < 1`` off the diagonal."""
        off = self.off_diagonal()
        ep, em = self.eps_plus[off], self.eps_minus[off]
        return bool(
            np.all((self.theta > 0) & (self.theta <= 1))
            and np.all((self.theta_minus >= 0) & (self.theta_minus <= 1))
            and np.all((em > 0) & (em < ep) & (ep < 1))
        )

    def max_abs_diff(self, other: BiasParams) -> float:
        _check_same_shape(self, other)
        return float(
            max(
                np.max(np.abs(self.theta - other.theta)),
                np.max(np.abs(self.theta_minus - other.theta_minus)),
                np.max(np.abs(self.eps_plus - other.eps_plus)),
                np.max(np.abs(self.eps_minus - other.eps_minus)),
            )
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BiasParams):
            return NotImplemented
        return (
            np.array_equal(self.theta, other.theta)
            and np.array_equal(self.theta_minus, other.theta_minus)
            and np.array_equal(self.eps_plus, other.eps_plus)
            and np.array_equal(self.eps_minus, other.eps_minus)
        )

    __hash__ = None  # type: ignore[assignment]


def _check_same_shape(a: BiasParams, b: BiasParams) -> None:
    if a.n_positions != b.n_positions:
        raise BiasParamsError(f"position counts differ: {a.n_positions} vs {b.n_positions}")


def init_default(n_positions: int) -> BiasParams:
    """``theta_i = 1/i``, ``theta_minus_i = 0.5/i``, ``eps+ = 0.9``, ``eps- = 0.1``."""
    if n_positions < 2:
        raise BiasParamsError(f"need at least 2 positions, got {n_positions}")
    ranks = np.arange(1, n_positions + 1, dtype=np.float64)
    shape = (n_positions, n_positions)
    return BiasParams(
        theta=1.0 / ranks,
        theta_minus=0.5 / ranks,
        eps_plus=np.full(shape, 0.9),
        eps_minus=np.full(shape, 0.1),
    )


def project(params: BiasParams, floor: float = DEFAULT_FLOOR) -> BiasParams:
    """Clamp into the feasible box; eps+ is clamped first, then eps- below it."""
    eps_plus = np.clip(params.eps_plus, 2.0 * floor, 1.0 - floor)
    eps_minus = np.clip(params.eps_minus, floor, eps_plus - floor)
    return BiasParams(
        theta=np.clip(params.theta, floor, 1.0 - floor),
        theta_minus=np.clip(params.theta_minus, floor, 1.0 - floor),
        eps_plus=eps_plus,
        eps_minus=eps_minus,
    )


def blend(
    old: BiasParams,
    estimate: BiasParams,
    alpha: float,
    floor: float = DEFAULT_FLOOR,
) -> BiasParams:
    """``p <- (1 - alpha) p + alpha p_hat`` on every entry, then :func:`project`."""
    _check_same_shape(old, estimate)
    if not 0.0 <= alpha <= 1.0:
        raise BiasParamsError(f"blend rate must lie in [0, 1], got {alpha}")
    keep = 1.0 - alpha
    blended = project(
        BiasParams(
            theta=keep * old.theta + alpha * estimate.theta,
            theta_minus=keep * old.theta_minus + alpha * estimate.theta_minus,
            eps_plus=keep * old.eps_plus + alpha * estimate.eps_plus,
            eps_minus=keep * old.eps_minus + alpha * estimate.eps_minus,
        ),
        floor=floor,
    )
    warn_theta_order(blended)
    return blended


def warn_theta_order(params: BiasParams) -> list[int]:
    """Positions where ``theta_minus > theta``; each one is logged, none is corrected."""
    bad = (np.nonzero(params.theta_minus > params.theta)[0] + 1).tolist()
    if bad:
        logger.warning(
            "theta_minus_exceeds_theta",
            positions=bad,
            theta=[round(float(params.theta[p - 1]), 6) for p in bad],
            theta_minus=[round(float(params.theta_minus[p - 1]), 6) for p in bad],
        )
    return bad


def params_to_frame(params: BiasParams) -> pl.DataFrame:
    """Long table ``param i j value``; vector parameters use ``j = 0``."""
    n = params.n_positions
    positions = np.arange(1, n + 1)
    rows_i, rows_j = np.nonzero(params.off_diagonal())
    names: list[str] = []
    ii: list[np.ndarray] = []
    jj: list[np.ndarray] = []
    values: list[np.ndarray] = []
    for name, vec in (("theta", params.theta), ("theta_minus", params.theta_minus)):
        names += [name] * n
        ii.append(positions)
        jj.append(np.zeros(n, dtype=np.int64))
        values.append(vec)
    for name, mat in (("eps_plus", params.eps_plus), ("eps_minus", params.eps_minus)):
        names += [name] * len(rows_i)
        ii.append(rows_i + 1)
        jj.append(rows_j + 1)
        values.append(mat[rows_i, rows_j])
    return pl.DataFrame(
        {
            "param": names,
            "i": np.concatenate(ii),
            "j": np.concatenate(jj),
            "value": np.concatenate(values),
        },
        schema=PARAM_TABLE_SCHEMA,
    )


def frame_to_params(df: pl.DataFrame) -> BiasParams:
    vectors = df.filter(pl.col("param") == "theta")
    n = vectors.height
    if n < 2:
        raise BiasParamsError(f"table holds {n} theta rows, need at least 2")
    unknown = set(df["param"].unique().to_list()) - {"theta", "theta_minus", "eps_plus", "eps_minus"}
    if unknown:
        raise BiasParamsError(f"unknown parameter names {sorted(unknown)}")

    def vector(name: str) -> np.ndarray:
        rows = df.filter(pl.col("param") == name)
        out = np.full(n, np.nan)
        out[rows["i"].to_numpy() - 1] = rows["value"].to_numpy()
        return out

    def matrix(name: str, fill: float) -> np.ndarray:
        rows = df.filter(pl.col("param") == name)
        out = np.full((n, n), fill)
        out[rows["i"].to_numpy() - 1, rows["j"].to_numpy() - 1] = rows["value"].to_numpy()
        return out

    theta, theta_minus = vector("theta"), vector("theta_minus")
    if np.isnan(theta).any() or np.isnan(theta_minus).any():
        raise BiasParamsError("theta or theta_minus missing for some positions")
    eps_plus = matrix("eps_plus", 0.9)
    eps_minus = matrix("eps_minus", 0.1)
    np.fill_diagonal(eps_plus, 0.9)
    np.fill_diagonal(eps_minus, 0.1)
    return BiasParams(theta=theta, theta_minus=theta_minus, eps_plus=eps_plus, eps_minus=eps_minus)


def write_params(params: BiasParams, path: Path, config_hash: str | None = None) -> Path:
    return write_table(params_to_frame(params), path, config_hash=config_hash)


def read_params(path: Path) -> BiasParams:
    if not path.exists():
        raise BiasParamsError(f"bias parameter table not found: {path}")
    return frame_to_params(read_table(path, schema=PARAM_TABLE_SCHEMA))
