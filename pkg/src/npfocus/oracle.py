"""Slow, obviously-correct reference computations for the Bernoulli change statistics.

Everything here recomputes statistics from first principles on each call: an
explicit scan over all candidate change times with closed-form segment MLEs,
plus a stack-scan convex minorant. These are the ground truth the pruned
recursion is tested against; they share no code with the fast path on purpose.
Cost is O(n) per call / O(n^2) per stream, acceptable for test equipment only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "OracleResult",
    "glr_oracle",
    "glr_oracle_unknown",
    "convex_minorant_oracle",
    "glr_prefix_stats",
    "glr_unknown_prefix_stats",
    "minorant_extremes_per_prefix",
]


@dataclass(frozen=True)
class OracleResult:
    """Exhaustive-scan result: the statistic, its change-time argmax, and all per-candidate values."""

    stat: float
    argmax_tau: int | None
    per_tau: tuple[tuple[int, float], ...]


def _pick_argmax(taus: np.ndarray, values: np.ndarray) -> tuple[float, int]:
    best = float(values.max())
    # ties resolved toward the most recent candidate
    where = np.flatnonzero(values == values.max())
    return best, int(taus[where[-1]])


def glr_oracle(xs, theta0: float) -> OracleResult:
    """Two-sided Bernoulli GLR by exhaustive scan over candidate change times.

    For each tau the post-change rate is re-estimated on the suffix, clamped to
    the side's admissible interval; the statistic is on the deviance scale
    (factor 2). Empty stream gives stat 0 with an undefined argmax.
    """
    if not 0.0 < theta0 < 1.0:
        raise ValueError("theta0 must lie strictly inside (0, 1)")
    bits = _as_bits(xs)
    n = bits.size
    if n == 0:
        return OracleResult(0.0, None, ())
    total = np.concatenate(([0], np.cumsum(bits)))
    taus = np.arange(n)
    s = total[n] - total[taus]
    m = n - taus
    values = np.maximum(_side_values(s, m, theta0, up=True), _side_values(s, m, theta0, up=False))
    stat, argmax = _pick_argmax(taus, values)
    return OracleResult(stat, argmax, tuple(zip(taus.tolist(), values.tolist())))


def glr_oracle_unknown(xs) -> OracleResult:
    """Bernoulli GLR with unknown pre-change rate: both segment rates re-estimated.

    Per tau in 1..n-1 the value is twice the gain of the split's saturated
    log-likelihood over the single-segment fit. Streams shorter than 2 give 0.
    """
    bits = _as_bits(xs)
    n = bits.size
    if n < 2:
        return OracleResult(0.0, None, ())
    total = np.concatenate(([0], np.cumsum(bits)))
    taus = np.arange(1, n)
    left = _saturated(total[taus], taus)
    right = _saturated(total[n] - total[taus], n - taus)
    full = _saturated(np.array([total[n]]), np.array([n]))[0]
    values = 2.0 * (left + right - full)
    stat, argmax = _pick_argmax(taus, values)
    return OracleResult(stat, argmax, tuple(zip(taus.tolist(), values.tolist())))


def convex_minorant_oracle(xs) -> list[int]:
    """Extreme points of the greatest convex minorant of the partial-sum path.

    The path is (0, S_1, ..., S_n) against time 0..n. Returned sorted; always
    contains 0 and n. Collinear interior points are not extreme and are
    dropped. Exact integer geometry throughout.
    """
    bits = _as_bits(xs)
    heights = np.concatenate(([0], np.cumsum(bits))).tolist()
    hull_x: list[int] = []
    hull_y: list[int] = []
    for x, y in enumerate(heights):
        while len(hull_x) >= 2:
            cross = (hull_x[-1] - hull_x[-2]) * (y - hull_y[-2]) - (hull_y[-1] - hull_y[-2]) * (x - hull_x[-2])
            if cross <= 0:  # right turn or collinear: middle point is not extreme
                hull_x.pop()
                hull_y.pop()
            else:
                break
        hull_x.append(x)
        hull_y.append(y)
    return hull_x


# -- vectorized every-prefix variants (same math, evaluated for all prefixes at once) --


def glr_prefix_stats(xs, theta0: float) -> np.ndarray:
    """glr_oracle stat after every prefix: out[k-1] is the stat of xs[:k]."""
    bits = _as_bits(xs)
    n = bits.size
    total = np.concatenate(([0], np.cumsum(bits)))
    tau = np.arange(n + 1)[:, None]
    k = np.arange(n + 1)[None, :]
    live = tau < k
    m = np.where(live, k - tau, 1)
    s = np.where(live, total[None, :] - total[:, None], 0)
    values = np.maximum(_side_values(s, m, theta0, up=True), _side_values(s, m, theta0, up=False))
    values[~live] = -np.inf
    return values[:, 1:].max(axis=0)


def glr_unknown_prefix_stats(xs) -> np.ndarray:
    """glr_oracle_unknown stat after every prefix: out[k-1] is the stat of xs[:k]."""
    bits = _as_bits(xs)
    n = bits.size
    total = np.concatenate(([0], np.cumsum(bits)))
    tau = np.arange(n + 1)[:, None]
    k = np.arange(n + 1)[None, :]
    live = (tau >= 1) & (tau < k)
    left = _saturated(total[:, None], np.maximum(tau, 1))
    right_s = np.where(live, total[None, :] - total[:, None], 0)
    right = _saturated(right_s, np.where(live, k - tau, 1))
    full = _saturated(total, np.maximum(np.arange(n + 1), 1))
    values = 2.0 * (left + right - full[None, :])
    values[~live] = -np.inf
    out = values[:, 1:].max(axis=0)
    return np.maximum(out, 0.0)  # prefixes shorter than 2 have no admissible split


def minorant_extremes_per_prefix(xs) -> list[list[int]]:
    """convex_minorant_oracle of every prefix: out[k-1] is the extreme set of xs[:k]."""
    bits = _as_bits(xs)
    return [convex_minorant_oracle(bits[:k]) for k in range(1, bits.size + 1)]


def _as_bits(xs) -> np.ndarray:
    bits = np.asarray(xs, dtype=np.int64)
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("stream must be 0/1 valued")
    return bits


def _side_values(s, m, theta0: float, *, up: bool) -> np.ndarray:
    """Deviance-scale GLR of suffix counts (s ones of m), rate clamped to one side of theta0."""
    s = np.asarray(s, dtype=float)
    m = np.asarray(m, dtype=float)
    ratio = s / m
    theta = np.maximum(ratio, theta0) if up else np.minimum(ratio, theta0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ones_term = np.where(s > 0, s * (np.log(theta) - np.log(theta0)), 0.0)
        zeros_term = np.where(m - s > 0, (m - s) * (np.log1p(-theta) - np.log1p(-theta0)), 0.0)
    return 2.0 * (ones_term + zeros_term)


def _saturated(s, m) -> np.ndarray:
    """Saturated Bernoulli segment log-likelihood: s*log(s/m) + (m-s)*log((m-s)/m), 0*log0 = 0."""
    s = np.asarray(s, dtype=float)
    m = np.asarray(m, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ones_term = np.where(s > 0, s * (np.log(s) - np.log(m)), 0.0)
        zeros_term = np.where(m - s > 0, (m - s) * (np.log(m - s) - np.log(m)), 0.0)
    return ones_term + zeros_term
