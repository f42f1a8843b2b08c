"""Benchmark harness: calibrate once, run replicated scenario streams, report
detection delay, false-positive rate, and the detection curve.

Protocol per experiment: the quantile grid is fit on a dedicated training draw
from the scenario's pre-change law, thresholds are tuned on null sequences at
the target average run length with that same grid, and every replicate stream
is monitored from its first observation with the shared grid until its first
trigger. Everything is a deterministic function of the experiment seed.

The training draw must be long. A grid estimated from n_train observations
binarizes the stream at rates off the nominal levels by ~n_train^-1/2, which
makes every null statistic drift linearly (about N*M/n_train in sum over an
N-long run); at an average run length of 10,000 a 100-point grid would force
drift-sized thresholds and hundreds of observations of detection delay. The
default of 5,000 keeps the total drift small against the thresholds.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Mapping

import numpy as np

from . import rng
from .calibrate import NullSampler, _thread_count, calibrate
from .detector import Thresholds, run_stream
from .quantiles import fit_quantiles, geometric_probabilities
from .scenarios import ScenarioSpec, generate, pre_change_draws

__all__ = ["REPORT_SCHEMA_VERSION", "ExperimentConfig", "ReplicateRecord", "ExperimentReport", "run_experiment", "elbow_sweep"]

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark run: which scenario, how many replicates, and the tuning target.

    The config seed re-seeds the scenario, so a config is the single source of
    determinism. Thresholds may be supplied directly to skip calibration.
    """

    scenario: ScenarioSpec
    replicates: int
    target_arl: int
    probation: int = 100
    num_quantiles: int = 15
    mode: str = "known"
    seed: int = 0
    calibration_replicates: int = 100
    training_n: int = 5000
    thresholds: Thresholds | None = None

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.target_arl < 1:
            raise ValueError("target_arl must be >= 1")
        if not 2 <= self.probation < self.scenario.tau:
            raise ValueError("probation must satisfy 2 <= probation < tau")
        if self.calibration_replicates < 20:
            raise ValueError("calibration_replicates must be >= 20")
        if self.training_n < 2:
            raise ValueError("training_n must be >= 2")

    @property
    def seeded_scenario(self) -> ScenarioSpec:
        return replace(self.scenario, seed=self.seed)

    def to_json(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario.to_json(),
            "replicates": self.replicates,
            "target_arl": self.target_arl,
            "probation": self.probation,
            "num_quantiles": self.num_quantiles,
            "mode": self.mode,
            "seed": self.seed,
            "calibration_replicates": self.calibration_replicates,
            "training_n": self.training_n,
            "thresholds": None if self.thresholds is None else self.thresholds.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "ExperimentConfig":
        thr = obj.get("thresholds")
        return cls(
            scenario=ScenarioSpec.from_json(obj["scenario"]),
            replicates=int(obj["replicates"]),
            target_arl=int(obj["target_arl"]),
            probation=int(obj.get("probation", 100)),
            num_quantiles=int(obj.get("num_quantiles", 15)),
            mode=obj.get("mode", "known"),
            seed=int(obj.get("seed", 0)),
            calibration_replicates=int(obj.get("calibration_replicates", 100)),
            training_n=int(obj.get("training_n", 5000)),
            thresholds=None if thr is None else Thresholds.from_json(thr),
        )


@dataclass(frozen=True)
class ReplicateRecord:
    """First-detection outcome of a single replicate stream."""

    replicate: int
    time: int | None  # global detection time, None when censored at n
    tau_hat: int | None
    trigger: str | None
    false_positive: bool  # detection at or before the true change
    delay: int | None  # time - tau for true detections only
    delay_label: str  # numeric, or "> n - tau" when censored

    def to_json(self) -> dict[str, Any]:
        return {
            "replicate": self.replicate,
            "time": self.time,
            "tau_hat": self.tau_hat,
            "trigger": self.trigger,
            "false_positive": self.false_positive,
            "delay": self.delay,
            "delay_label": self.delay_label,
        }


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregates over replicates, plus the raw per-replicate outcomes.

    avg_delay averages true detections only; censoring is reported separately
    with the "> n - tau" convention. The detection curve lists, at each first
    detection time, the fraction of replicates detected by then.
    """

    config: ExperimentConfig
    thresholds: Thresholds
    records: tuple[ReplicateRecord, ...]
    avg_delay: float | None
    delay_se: float | None
    fpr: float
    detected_fraction: float
    censored: int
    detection_curve: tuple[tuple[int, float], ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config": self.config.to_json(),
            "thresholds": self.thresholds.to_json(),
            "avg_delay": self.avg_delay,
            "delay_se": self.delay_se,
            "fpr": self.fpr,
            "detected_fraction": self.detected_fraction,
            "censored": self.censored,
            "censored_label": f"> {self.config.scenario.n - self.config.scenario.tau}",
            "detection_curve": [[t, frac] for t, frac in self.detection_curve],
            "replicates": [r.to_json() for r in self.records],
        }


def _training_grid(spec: ScenarioSpec, training_n: int, num_quantiles: int):
    """Grid shared by calibration and all replicates, fit on a dedicated
    pre-change training draw."""
    train = pre_change_draws(spec, 0, training_n, rng.PURPOSE_CAL_TRAIN)
    return fit_quantiles(train, geometric_probabilities(num_quantiles, training_n))


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Calibrate once, then measure first-detection behavior over replicate streams."""
    spec = cfg.seeded_scenario
    grid = _training_grid(spec, cfg.training_n, cfg.num_quantiles)
    if cfg.thresholds is not None:
        thresholds = cfg.thresholds
    else:
        thresholds = calibrate(NullSampler.simulate(spec), grid, cfg.target_arl, cfg.calibration_replicates, cfg.mode)

    censored_label = f"> {spec.n - spec.tau}"
    records: list[ReplicateRecord | None] = [None] * cfg.replicates

    def one(i: int) -> None:
        ys = generate(replace(spec, replicate=i))
        res = run_stream(
            ys,
            thresholds,
            num_quantiles=cfg.num_quantiles,
            probation=cfg.probation,
            mode=cfg.mode,
            grid=grid,
            restart_on_detection=False,
        )
        if not res.events:
            records[i] = ReplicateRecord(i, None, None, None, False, None, censored_label)
            return
        ev = res.events[0]
        fp = ev.time <= spec.tau
        delay = None if fp else ev.time - spec.tau
        records[i] = ReplicateRecord(i, ev.time, ev.tau_hat, ev.trigger, fp, delay, "" if fp else str(delay))

    threads = _thread_count()
    if threads == 1:
        for i in range(cfg.replicates):
            one(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one, range(cfg.replicates)))

    done: list[ReplicateRecord] = [r for r in records if r is not None]
    delays = np.array([r.delay for r in done if r.delay is not None], dtype=float)
    avg_delay = float(delays.mean()) if delays.size else None
    delay_se = float(delays.std(ddof=1) / math.sqrt(delays.size)) if delays.size > 1 else None
    fpr = sum(r.false_positive for r in done) / cfg.replicates
    detected = [r.time for r in done if r.time is not None]
    detected_fraction = len(detected) / cfg.replicates
    curve: list[tuple[int, float]] = []
    for t in sorted(set(detected)):
        curve.append((t, sum(d <= t for d in detected) / cfg.replicates))
    return ExperimentReport(
        config=cfg,
        thresholds=thresholds,
        records=tuple(done),
        avg_delay=avg_delay,
        delay_se=delay_se,
        fpr=fpr,
        detected_fraction=detected_fraction,
        censored=sum(r.time is None for r in done),
        detection_curve=tuple(curve),
    )


def elbow_sweep(cfg: ExperimentConfig, m_values) -> list[dict[str, Any]]:
    """run_experiment at each grid size, recalibrating per size; one table row each."""
    rows = []
    for m in m_values:
        report = run_experiment(replace(cfg, num_quantiles=int(m)))
        rows.append(
            {
                "m": int(m),
                "avg_delay": report.avg_delay,
                "delay_se": report.delay_se,
                "fpr": report.fpr,
                "detected_fraction": report.detected_fraction,
                "censored": report.censored,
            }
        )
    return rows
