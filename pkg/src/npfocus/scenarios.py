"""Seeded simulation scenarios: six univariate streams with a single distributional change.

Each scenario draws y_1..y_n with the pre-change law on t <= tau and the
post-change law from tau+1 (tau = n means no change ever happens). All draws
are deterministic functions of (seed, replicate) through disjoint counter-based
substreams, so replicates are reproducible and order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from . import rng

__all__ = ["SCENARIO_NAMES", "ScenarioSpec", "generate", "pre_change_draws", "pre_change_sampler"]

# Parameter defaults, including values the originating experiments leave open;
# they live here so every report that embeds a spec is self-describing.
_DEFAULTS: dict[str, dict[str, float]] = {
    "cauchy": {"loc": 0.0, "scale_pre": 1.0, "scale_post": 5.0},
    "gauss": {"mean_pre": 0.0, "mean_post": 1.0, "sd": 1.0},
    "multim": {"mu_near": 0.0, "mu_far": 10.0, "sd": 1.0, "alpha_pre": 2.0 / 3.0, "alpha_post": 1.0 / 3.0},
    "ou": {"theta": 0.1, "forcing_post": -10.0, "sigma_nu": 1.0, "sigma_eps": 1.0},
    "sinusoidal": {"f": 0.2, "lam": 0.005, "amplitude": 1.0, "sd": 1.0},
    "tails": {"df": 5.0, "fraction": 0.2, "poisson_mean": 10.0},
}

SCENARIO_NAMES = tuple(sorted(_DEFAULTS))

# Noise roles within one replicate's stream address.
_ROLE_MAIN = 0
_ROLE_SELECT = 1
_ROLE_EXTRA = 2


@dataclass(frozen=True)
class ScenarioSpec:
    """One fully-specified simulation: which generator, its parameters, and the draw address."""

    name: str
    n: int
    tau: int
    seed: int
    replicate: int = 0
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.name not in _DEFAULTS:
            raise ValueError(f"unknown scenario {self.name!r}; expected one of {SCENARIO_NAMES}")
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if not 0 <= self.tau <= self.n:
            raise ValueError("tau must satisfy 0 <= tau <= n")
        merged = dict(_DEFAULTS[self.name])
        for key, value in dict(self.params).items():
            if key not in merged:
                raise ValueError(f"scenario {self.name!r} has no parameter {key!r}")
            merged[key] = float(value)
        for key in ("scale_pre", "scale_post", "sd", "sigma_nu", "sigma_eps", "poisson_mean"):
            if key in merged and merged[key] <= 0:
                raise ValueError(f"{key} must be positive")
        if self.name == "multim" and not (0 <= merged["alpha_pre"] <= 1 and 0 <= merged["alpha_post"] <= 1):
            raise ValueError("mixture weights must lie in [0, 1]")
        if self.name == "tails":
            if merged["df"] < 1 or merged["df"] != int(merged["df"]):
                raise ValueError("df must be a positive integer")
            if not 0 <= merged["fraction"] <= 1:
                raise ValueError("fraction must lie in [0, 1]")
        object.__setattr__(self, "params", merged)

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "tau": self.tau,
            "seed": self.seed,
            "replicate": self.replicate,
            "params": dict(self.params),
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "ScenarioSpec":
        return cls(
            name=obj["name"],
            n=int(obj["n"]),
            tau=int(obj["tau"]),
            seed=int(obj["seed"]),
            replicate=int(obj.get("replicate", 0)),
            params=obj.get("params", {}),
        )


def generate(spec: ScenarioSpec) -> np.ndarray:
    """Draw the full stream y_1..y_n for one replicate."""
    return _draw(spec, rng.PURPOSE_SCENARIO)


def pre_change_draws(spec: ScenarioSpec, index: int, length: int, purpose: int = rng.PURPOSE_CAL_NULL) -> np.ndarray:
    """Draw ``length`` observations from the pre-change law only, on stream ``index``."""
    null_spec = replace(spec, n=length, tau=length, replicate=index)
    return _draw(null_spec, purpose)


def pre_change_sampler(spec: ScenarioSpec):
    """Sampler over pre-change-law sequences, suitable for threshold calibration."""
    from .calibrate import NullSampler  # deferred: calibrate imports this module

    return NullSampler.simulate(spec)


def _draw(spec: ScenarioSpec, purpose: int) -> np.ndarray:
    n, tau = spec.n, spec.tau
    p = spec.params
    if n == 0:
        return np.empty(0)

    def stream(role: int) -> np.random.Generator:
        return rng.substream(spec.seed, purpose, spec.replicate, role)

    post = np.arange(1, n + 1) > tau  # change takes effect from tau+1

    if spec.name == "gauss":
        z = rng.normals(stream(_ROLE_MAIN), n)
        mean = np.where(post, p["mean_post"], p["mean_pre"])
        return mean + p["sd"] * z

    if spec.name == "cauchy":
        std = rng.cauchys(stream(_ROLE_MAIN), n)
        scale = np.where(post, p["scale_post"], p["scale_pre"])
        return p["loc"] + scale * std

    if spec.name == "multim":
        z = rng.normals(stream(_ROLE_MAIN), n)
        u = rng.uniforms(stream(_ROLE_SELECT), n)
        alpha = np.where(post, p["alpha_post"], p["alpha_pre"])
        center = np.where(u < alpha, p["mu_near"], p["mu_far"])
        return center + p["sd"] * z

    if spec.name == "ou":
        w = rng.normals(stream(_ROLE_MAIN), n)
        eps = rng.normals(stream(_ROLE_SELECT), n)
        theta, s_nu, s_eps = p["theta"], p["sigma_nu"], p["sigma_eps"]
        y = np.empty(n)
        nu_prev = 0.0
        for t in range(1, n + 1):
            f_prev = p["forcing_post"] if t - 1 > tau else 0.0
            nu = nu_prev - theta * f_prev - theta * nu_prev + s_nu * w[t - 1]
            y[t - 1] = nu + s_eps * eps[t - 1]
            nu_prev = nu
        return y

    if spec.name == "sinusoidal":
        z = rng.normals(stream(_ROLE_MAIN), n)
        t = np.arange(1, n + 1, dtype=float)
        wave = np.sin(math.pi * p["f"] * t)
        mean = np.where(post, p["amplitude"] * wave * np.exp(-p["lam"] * t), wave)
        return mean + p["sd"] * z

    if spec.name == "tails":
        y = rng.student_ts(stream(_ROLE_MAIN), int(p["df"]), n)
        u = rng.uniforms(stream(_ROLE_SELECT), n)
        hit = post & (u < p["fraction"])
        count = int(np.count_nonzero(hit))
        if count:
            bumps = rng.poissons(stream(_ROLE_EXTRA), p["poisson_mean"], count)
            y = y.copy()
            y[hit] += bumps
        return y

    raise AssertionError(f"unhandled scenario {spec.name!r}")
