"""Nonparametric sequential change detection for univariate streams.

The stream is binarized against a grid of training quantiles; each grid level
runs an exact functionally-pruned Bernoulli scan statistic, and the per-level
statistics are aggregated by sum and by max against calibrated thresholds.
"""

from .bernoulli import BernoulliFocus, BernoulliFocusUnknown, Piece, g_value, piece_max
from .calibrate import NullSampler, calibrate, collect_null_maxima
from .detector import (
    PROBATION,
    DetectionEvent,
    NpFocus,
    StreamResult,
    Thresholds,
    binarize,
    run_stream,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    ReplicateRecord,
    elbow_sweep,
    run_experiment,
)
from .oracle import (
    OracleResult,
    convex_minorant_oracle,
    glr_oracle,
    glr_oracle_unknown,
    glr_prefix_stats,
    glr_unknown_prefix_stats,
    minorant_extremes_per_prefix,
)
from .quantiles import QuantileGrid, fit_quantiles, geometric_probabilities
from .scenarios import SCENARIO_NAMES, ScenarioSpec, generate, pre_change_draws, pre_change_sampler

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BernoulliFocus",
    "BernoulliFocusUnknown",
    "Piece",
    "g_value",
    "piece_max",
    "NullSampler",
    "calibrate",
    "collect_null_maxima",
    "PROBATION",
    "DetectionEvent",
    "NpFocus",
    "StreamResult",
    "Thresholds",
    "binarize",
    "run_stream",
    "ExperimentConfig",
    "ExperimentReport",
    "ReplicateRecord",
    "elbow_sweep",
    "run_experiment",
    "OracleResult",
    "convex_minorant_oracle",
    "glr_oracle",
    "glr_oracle_unknown",
    "glr_prefix_stats",
    "glr_unknown_prefix_stats",
    "minorant_extremes_per_prefix",
    "QuantileGrid",
    "fit_quantiles",
    "geometric_probabilities",
    "SCENARIO_NAMES",
    "ScenarioSpec",
    "generate",
    "pre_change_draws",
    "pre_change_sampler",
]
