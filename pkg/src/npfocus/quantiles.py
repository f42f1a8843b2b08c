"""Geometrically spaced quantile probabilities and nearest-rank quantile fitting.

The probability grid concentrates levels near both tails (where distributional
changes are easiest to see through an indicator) and is exactly symmetric
about 1/2. Data-scale thresholds are fitted by the nearest-rank rule with no
interpolation, so the whole downstream pipeline depends on the data only
through ranks and is exactly invariant under strictly increasing transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

__all__ = ["GRID_SCHEMA_VERSION", "QuantileGrid", "geometric_probabilities", "fit_quantiles"]

GRID_SCHEMA_VERSION = 1


def geometric_probabilities(count: int, training_n: int) -> np.ndarray:
    """The ``count`` geometrically spaced probability levels for a training size.

    Level m of M is 1/(1 + (2n-1)^((M-2m+1)/M)): strictly increasing in m,
    pairwise symmetric about 1/2 (p_m + p_{M+1-m} = 1), with the middle level
    exactly 1/2 for odd M. The exponent is computed from the integer
    M-2m+1 so the symmetry and the exact-1/2 midpoint survive floating point.
    For training_n = 1 every level degenerates to 1/2.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if training_n < 1:
        raise ValueError("training_n must be >= 1")
    log_span = math.log(2 * training_n - 1)
    exponents = count - 2 * np.arange(1, count + 1) + 1  # M-2m+1, antisymmetric integers
    return 1.0 / (1.0 + np.exp(log_span * exponents / count))


def fit_quantiles(training: Sequence[float], probs: Sequence[float]) -> "QuantileGrid":
    """Fit data-scale thresholds as nearest-rank empirical quantiles of the training data.

    The rank for level p is ceil(p * len(training)) clamped to [1, len], in
    double precision; short training sets may repeat values. Raises on empty
    training data.
    """
    data = np.asarray(training, dtype=float)
    if data.size == 0:
        raise ValueError("training data must be nonempty")
    if np.isnan(data).any():
        raise ValueError("training data contains NaN")
    levels = np.asarray(probs, dtype=float)
    order = np.sort(data)
    ranks = np.ceil(levels * data.size).astype(np.int64)
    ranks = np.clip(ranks, 1, data.size)
    return QuantileGrid(
        probs=tuple(float(p) for p in levels),
        values=tuple(float(v) for v in order[ranks - 1]),
        training_n=int(data.size),
    )


@dataclass(frozen=True)
class QuantileGrid:
    """Fitted grid: probability levels, matching data-scale thresholds, training size."""

    probs: tuple[float, ...]
    values: tuple[float, ...]
    training_n: int

    def __post_init__(self) -> None:
        if len(self.probs) != len(self.values):
            raise ValueError("probs and values must have equal length")
        if not self.probs:
            raise ValueError("grid must hold at least one level")
        if self.training_n < 1:
            raise ValueError("training_n must be >= 1")
        arr = np.asarray(self.probs)
        if not ((arr > 0).all() and (arr < 1).all()):
            raise ValueError("probability levels must lie strictly inside (0, 1)")
        if not (np.diff(arr) > 0).all():
            raise ValueError("probability levels must be strictly increasing")
        if not (np.diff(np.asarray(self.values)) >= 0).all():
            raise ValueError("threshold values must be nondecreasing")

    def __len__(self) -> int:
        return len(self.probs)

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": GRID_SCHEMA_VERSION,
            "probs": list(self.probs),
            "values": list(self.values),
            "training_n": self.training_n,
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "QuantileGrid":
        version = obj.get("schema_version", GRID_SCHEMA_VERSION)
        if version != GRID_SCHEMA_VERSION:
            raise ValueError(f"unsupported grid schema_version {version!r}")
        return cls(
            probs=tuple(float(p) for p in obj["probs"]),
            values=tuple(float(v) for v in obj["values"]),
            training_n=int(obj["training_n"]),
        )
