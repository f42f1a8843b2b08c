"""Exact sequential Bernoulli GLR detectors with functional pruning.

Each detector tracks, for every still-viable candidate change time tau, the
likelihood-ratio curve of the post-change success rate as an integer count
pair, and prunes candidates that can never again be optimal. The maximum over
the surviving curves equals the exhaustive-scan GLR at every step, at
O(pruned) amortized cost per observation.

Two variants:

- `BernoulliFocus`: the pre-change rate theta0 is known; two one-sided banks
  (rate above / below theta0) share the work, the down side being the up-side
  recursion on inverted bits with the complementary rate.
- `BernoulliFocusUnknown`: theta0 is also estimated; pieces carry an offset
  equal to twice the best pre-change log-likelihood at their insertion time,
  and the reported statistic is the nonnegative deviance-scale GLR of the best
  split against the single-segment fit.

All statistics are on the deviance scale (twice the log-likelihood ratio).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = ["Piece", "g_value", "piece_max", "BernoulliFocus", "BernoulliFocusUnknown"]


@dataclass(frozen=True)
class Piece:
    """Snapshot of one stored candidate: change time tau, counts since tau, offset."""

    tau: int
    a: int
    b: int
    c: float = 0.0

    @property
    def ratio(self) -> float:
        """Success fraction since tau; the curve's unconstrained argmax."""
        m = self.a + self.b
        return self.a / m if m else math.nan


def g_value(x: int, theta: float, theta0: float) -> float:
    """Deviance-scale per-observation log-likelihood ratio of rate theta vs theta0."""
    if x not in (0, 1):
        raise ValueError("x must be 0 or 1")
    if not (0.0 < theta < 1.0 and 0.0 < theta0 < 1.0):
        raise ValueError("rates must lie strictly inside (0, 1)")
    return 2.0 * (x * math.log(theta / theta0) + (1 - x) * math.log((1.0 - theta) / (1.0 - theta0)))


def piece_max(a: int, b: int, theta0: float) -> float:
    """Maximum of an up-side piece's curve over rates in [theta0, 1].

    The unconstrained argmax is a/(a+b); clamping to theta0 makes the value 0,
    and the boundary cases a=0 or b=0 stay finite under the 0*log0 convention.
    The down side of a detector evaluates as piece_max(b, a, 1 - theta0).
    """
    if a < 0 or b < 0:
        raise ValueError("counts must be nonnegative")
    if not 0.0 < theta0 < 1.0:
        raise ValueError("theta0 must lie strictly inside (0, 1)")
    m = a + b
    if m == 0 or a == 0:
        return 0.0
    theta = a / m
    if theta <= theta0:
        return 0.0
    if b == 0:
        return -2.0 * a * math.log(theta0)
    return 2.0 * (a * math.log(theta / theta0) + b * math.log((1.0 - theta) / (1.0 - theta0)))


class _DetectorBase:
    """Shared array plumbing for the streaming single-detector classes."""

    _has_offsets = False

    def __init__(self) -> None:
        self._cap = 64
        self._ins_t = np.zeros((1, 2, self._cap), dtype=np.int64)
        self._ins_ones = np.zeros((1, 2, self._cap), dtype=np.int64)
        self._ins_c = np.zeros((1, 2, self._cap)) if self._has_offsets else None
        self._k = np.ones((1, 2), dtype=np.int64)
        self._ones = np.zeros((1, 2), dtype=np.int64)
        self._n = 0
        self._stat = 0.0
        self._stats_buf = np.empty(1)
        self._xbits_buf = np.empty(1, dtype=np.int64)

    def reset(self) -> None:
        """Return to the just-constructed state (stream length 0)."""
        self._ins_t[:] = 0
        self._ins_ones[:] = 0
        if self._ins_c is not None:
            self._ins_c[:] = 0.0
        self._k[:] = 1
        self._ones[:] = 0
        self._n = 0
        self._stat = 0.0

    @property
    def n(self) -> int:
        """Observations consumed so far."""
        return self._n

    @property
    def stat(self) -> float:
        """Statistic after the most recent update (0 before any update)."""
        return self._stat

    def _ensure_capacity(self) -> None:
        if int(self._k.max()) + 1 < self._cap:
            return
        new_cap = 2 * self._cap
        for name in ("_ins_t", "_ins_ones", "_ins_c"):
            arr = getattr(self, name)
            if arr is None:
                continue
            grown = np.zeros((1, 2, new_cap), dtype=arr.dtype)
            grown[:, :, : self._cap] = arr
            setattr(self, name, grown)
        self._cap = new_cap

    def pieces(self, side: str = "up") -> list[Piece]:
        """Stored pieces of one side, oldest first, trailing zero piece included.

        Down-side counts are reported in that side's own (inverted-bit) terms.
        """
        s = {"up": 0, "down": 1}[side]
        k = int(self._k[0, s])
        ones = int(self._ones[0, s])
        out = []
        for i in range(k):
            tau = int(self._ins_t[0, s, i])
            a = ones - int(self._ins_ones[0, s, i])
            b = (self._n - tau) - a
            c = float(self._ins_c[0, s, i]) if self._ins_c is not None else 0.0
            out.append(Piece(tau=tau, a=a, b=b, c=c))
        return out

    @staticmethod
    def _check_bit(x: int) -> int:
        if x not in (0, 1):
            raise ValueError("observations must be 0 or 1")
        return int(x)


class BernoulliFocus(_DetectorBase):
    """Two-sided sequential Bernoulli GLR detector with known pre-change rate.

    update(x) consumes one 0/1 observation and returns the current statistic:
    the exact maximum over all candidate change times and all post-change
    rates on either side of theta0, on the deviance scale.
    """

    def __init__(self, theta0: float) -> None:
        if not 0.0 < theta0 < 1.0:
            raise ValueError("theta0 must lie strictly inside (0, 1)")
        super().__init__()
        self.theta0 = float(theta0)
        self._theta = np.array([[self.theta0, 1.0 - self.theta0]])

    def update(self, x: int) -> float:
        """Advance by one observation; returns the new statistic."""
        bit = self._check_bit(x)
        self._ensure_capacity()
        self._n += 1
        self._xbits_buf[0] = bit
        _, smax, _ = _kernels.bank_step_known(
            self._ins_t, self._ins_ones, self._k, self._ones, self._theta, self._n, self._xbits_buf, self._stats_buf
        )
        self._stat = float(smax)
        return self._stat

    def changepoint_estimate(self) -> int:
        """Change time of the maximizing piece; ties go to the most recent candidate.

        Raises ValueError while the statistic is zero (no evidence, estimate undefined).
        """
        value, tau = _kernels.detector_best_known(
            self._ins_t, self._ins_ones, self._k, self._ones, self._theta, self._n, 0
        )
        if value <= 0.0:
            raise ValueError("changepoint estimate undefined: statistic is zero")
        return int(tau)


class BernoulliFocusUnknown(_DetectorBase):
    """Two-sided sequential Bernoulli GLR detector with the pre-change rate estimated too."""

    _has_offsets = True

    def update(self, x: int) -> float:
        """Advance by one observation; returns the new statistic."""
        bit = self._check_bit(x)
        self._ensure_capacity()
        self._n += 1
        self._xbits_buf[0] = bit
        _, smax, _ = _kernels.bank_step_unknown(
            self._ins_t, self._ins_ones, self._ins_c, self._k, self._ones, self._n, self._xbits_buf, self._stats_buf
        )
        self._stat = float(smax)
        return self._stat

    def changepoint_estimate(self) -> int:
        """Change time of the maximizing piece; ties go to the most recent candidate."""
        value, tau = _kernels.detector_best_unknown(
            self._ins_t, self._ins_ones, self._ins_c, self._k, self._ones, self._n, 0
        )
        if value <= 0.0:
            raise ValueError("changepoint estimate undefined: statistic is zero")
        return int(tau)
