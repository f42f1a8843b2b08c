"""Seeded counter-based random streams and the exact draw transforms used everywhere.

All randomness in this package flows through Philox (a counter-based 64-bit
generator) addressed by ``(seed, purpose, index, role)``. Replicates and noise
roles therefore own disjoint, order-independent streams: drawing replicate 7
never depends on whether replicate 6 was drawn, which keeps every simulation
reproducible under any scheduling.

The distribution transforms are deliberately spelled out here instead of using
the generator's built-in methods, so the exact stream of values is a documented
function of the uniform stream (and is pinned by golden-file tests):

- normals: Box-Muller on pairs ``(1 - u1, u2)`` (the shift avoids log 0),
- Cauchy: ``loc + scale * tan(pi * (u - 0.5))``,
- Poisson: CDF inversion walking the pmf upward from 0,
- Student t_df: ``Z / sqrt(chi2_df / df)`` with the chi-square built from
  ``df`` squared normals.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "PURPOSE_SCENARIO",
    "PURPOSE_CAL_NULL",
    "PURPOSE_CAL_TRAIN",
    "substream",
    "uniforms",
    "normals",
    "cauchys",
    "poissons",
    "student_ts",
]

# Purpose words keep scenario replicates, calibration nulls, and calibration
# training draws on provably disjoint streams under a single user seed.
PURPOSE_SCENARIO = 0
PURPOSE_CAL_NULL = 1
PURPOSE_CAL_TRAIN = 2

_INDEX_BITS = 34
_ROLE_BITS = 8


def substream(seed: int, purpose: int, index: int = 0, role: int = 0) -> np.random.Generator:
    """Return the generator for the (seed, purpose, index, role) address.

    Args:
        seed: user seed, any Python int (reduced mod 2**64).
        purpose: small namespace constant (< 2**22).
        index: replicate or stream index (< 2**34).
        role: noise role within one replicate, e.g. primary draws vs
            auxiliary selection draws (< 2**8).
    """
    if not 0 <= index < (1 << _INDEX_BITS):
        raise ValueError(f"stream index out of range: {index}")
    if not 0 <= role < (1 << _ROLE_BITS):
        raise ValueError(f"stream role out of range: {role}")
    if not 0 <= purpose < (1 << (64 - _INDEX_BITS - _ROLE_BITS)):
        raise ValueError(f"stream purpose out of range: {purpose}")
    word = (purpose << (_INDEX_BITS + _ROLE_BITS)) | (index << _ROLE_BITS) | role
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, word], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(gen: np.random.Generator, size: int) -> np.ndarray:
    """float64 draws in [0, 1)."""
    return gen.random(size)


def normals(gen: np.random.Generator, size: int) -> np.ndarray:
    """Standard normal draws via Box-Muller.

    Consumes 2*ceil(size/2) uniforms regardless of later truncation, so the
    stream position after the call depends only on ``size``.
    """
    pairs = (size + 1) // 2
    u1 = 1.0 - gen.random(pairs)  # in (0, 1], keeps log finite
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:size]


def cauchys(gen: np.random.Generator, size: int, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
    """Cauchy(loc, scale) draws via the tangent transform."""
    u = gen.random(size)
    return loc + scale * np.tan(math.pi * (u - 0.5))


def poissons(gen: np.random.Generator, lam: float, size: int) -> np.ndarray:
    """Poisson(lam) draws by CDF inversion; one uniform per draw."""
    if lam <= 0:
        raise ValueError("poisson mean must be positive")
    u = gen.random(size)
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        target = u[i]
        k = 0
        pmf = math.exp(-lam)
        cdf = pmf
        # Walk up the pmf; the cap only matters if u is within rounding of 1.
        while target > cdf and k < 4096:
            k += 1
            pmf *= lam / k
            cdf += pmf
        out[i] = k
    return out


def student_ts(gen: np.random.Generator, df: int, size: int) -> np.ndarray:
    """Student-t draws with ``df`` degrees of freedom via Z / sqrt(chi2/df).

    Consumes one block of (df+1)*size normals: the first ``size`` are the
    numerators, the rest form the chi-square denominators.
    """
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    z = normals(gen, (df + 1) * size)
    numer = z[:size]
    denom = z[size:].reshape(df, size)
    chi2 = np.sum(denom * denom, axis=0)
    return numer / np.sqrt(chi2 / df)
