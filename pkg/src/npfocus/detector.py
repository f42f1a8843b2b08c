"""The full streaming detector: binarize against a quantile grid, run M Bernoulli
detectors, aggregate by sum and max, compare to thresholds, and manage the
probation / rolling-window / restart lifecycle.

Two entry points share the compiled kernels and produce bit-identical
statistics:

- `NpFocus`: an observation-at-a-time class for streaming callers,
- `run_stream`: a batch driver over a whole array, used by calibration, the
  benchmark harness, and the CLI.

Time is 1-indexed over the whole stream including probation. A detection
reports the global time, which statistic(s) tripped, the quantile index
carrying the strongest evidence, and that detector's change-time estimate.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

from . import _kernels
from .quantiles import QuantileGrid, fit_quantiles, geometric_probabilities

__all__ = [
    "THRESHOLDS_SCHEMA_VERSION",
    "STATE_SCHEMA_VERSION",
    "PROBATION",
    "Probation",
    "Thresholds",
    "DetectionEvent",
    "binarize",
    "NpFocus",
    "StreamResult",
    "run_stream",
]

THRESHOLDS_SCHEMA_VERSION = 1
STATE_SCHEMA_VERSION = 1

_MODES = ("known", "unknown")


class Probation:
    """Sentinel step result while the quantile grid is still being fitted."""

    _instance: "Probation | None" = None

    def __new__(cls) -> "Probation":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "PROBATION"


PROBATION = Probation()


def _encode_float(x: float) -> Any:
    return "inf" if math.isinf(x) else float(x)


def _decode_float(x: Any) -> float:
    if isinstance(x, str):
        if x.lower() in ("inf", "infinity", "+inf"):
            return math.inf
        raise ValueError(f"bad float encoding {x!r}")
    return float(x)


@dataclass(frozen=True)
class Thresholds:
    """Trigger levels for the two aggregate statistics, plus calibration provenance.

    Setting either level to +inf disables that trigger (serialized as "inf").
    """

    xi_sum: float
    xi_max: float
    target_arl: int | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.xi_sum > 0 and self.xi_max > 0):
            raise ValueError("thresholds must be positive")

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": THRESHOLDS_SCHEMA_VERSION,
            "xi_sum": _encode_float(self.xi_sum),
            "xi_max": _encode_float(self.xi_max),
            "target_arl": self.target_arl,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Thresholds":
        version = obj.get("schema_version", THRESHOLDS_SCHEMA_VERSION)
        if version != THRESHOLDS_SCHEMA_VERSION:
            raise ValueError(f"unsupported thresholds schema_version {version!r}")
        target = obj.get("target_arl")
        return cls(
            xi_sum=_decode_float(obj["xi_sum"]),
            xi_max=_decode_float(obj["xi_max"]),
            target_arl=None if target is None else int(target),
            meta=dict(obj.get("meta", {})),
        )


@dataclass(frozen=True)
class DetectionEvent:
    """A trigger: when, on which statistic(s), how strong, and the estimated change time."""

    time: int
    trigger: str  # "sum" | "max" | "both"
    sum_stat: float
    max_stat: float
    max_quantile_index: int  # 0-based index into the grid
    tau_hat: int


def binarize(y: float, p: float) -> int:
    """Indicator of y <= p; the only way stream values enter the statistics.

    NaN input raises: a NaN compares false against everything and would
    silently turn into an all-zeros row, so it is treated as stream corruption.
    """
    if math.isnan(y):
        raise ValueError("NaN observation: corrupted stream")
    return 1 if y <= p else 0


def _theta_pairs(probs: Iterable[float]) -> np.ndarray:
    levels = np.asarray(tuple(probs), dtype=float)
    return np.column_stack((levels, 1.0 - levels))


class NpFocus:
    """Observation-at-a-time detector with probation, rolling window, and restart.

    The first ``probation`` observations only feed the quantile grid (step
    returns PROBATION); monitoring starts on the next observation. A rolling
    window of the last ``probation`` observations is always maintained so that
    `restart` can refit the grid after a detection without a dead period.
    """

    def __init__(
        self,
        thresholds: Thresholds,
        *,
        num_quantiles: int = 15,
        probation: int = 100,
        mode: str = "known",
        grid: QuantileGrid | None = None,
    ) -> None:
        if mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if probation < 2:
            raise ValueError("probation must be >= 2")
        if num_quantiles < 1:
            raise ValueError("num_quantiles must be >= 1")
        self.thresholds = thresholds
        self.mode = mode
        self.probation = int(probation)
        self.num_quantiles = int(num_quantiles) if grid is None else len(grid)
        self._t = 0
        self._window: deque[float] = deque(maxlen=self.probation)
        self._buffer: list[float] = []
        self._grid: QuantileGrid | None = None
        self._sum_stat = 0.0
        self._max_stat = 0.0
        if grid is not None:
            self._install_grid(grid)

    # -- public state ------------------------------------------------------

    @property
    def t(self) -> int:
        """Global 1-indexed time of the last observation consumed."""
        return self._t

    @property
    def grid(self) -> QuantileGrid | None:
        return self._grid

    @property
    def sum_stat(self) -> float:
        return self._sum_stat

    @property
    def max_stat(self) -> float:
        return self._max_stat

    @property
    def monitoring(self) -> bool:
        return self._grid is not None

    # -- lifecycle ---------------------------------------------------------

    def _install_grid(self, grid: QuantileGrid) -> None:
        self._grid = grid
        self._values = np.asarray(grid.values)
        self._theta = _theta_pairs(grid.probs)
        m = len(grid)
        self._cap = 64
        self._ins_t = np.zeros((m, 2, self._cap), dtype=np.int64)
        self._ins_ones = np.zeros((m, 2, self._cap), dtype=np.int64)
        self._ins_c = np.zeros((m, 2, self._cap)) if self.mode == "unknown" else None
        self._k = np.ones((m, 2), dtype=np.int64)
        self._ones = np.zeros((m, 2), dtype=np.int64)
        self._local_n = 0
        self._monitor_offset = self._t
        self._stats_buf = np.empty(m)
        self._xbits_buf = np.empty(m, dtype=np.int64)
        self._sum_stat = 0.0
        self._max_stat = 0.0

    def restart(self) -> None:
        """Refit the grid from the rolling window and reset all detectors.

        Thresholds are kept. With a full window, monitoring resumes on the very
        next observation; with fewer than 2 buffered observations the detector
        falls back to a full probation period.
        """
        window = list(self._window)
        if len(window) >= 2:
            probs = geometric_probabilities(self.num_quantiles, len(window))
            self._install_grid(fit_quantiles(window, probs))
        else:
            self._grid = None
            self._buffer = []
        self._sum_stat = 0.0
        self._max_stat = 0.0

    # -- stepping ----------------------------------------------------------

    def step(self, y: float) -> None | Probation | DetectionEvent:
        """Consume one observation; returns PROBATION, a DetectionEvent, or None."""
        y = float(y)
        if math.isnan(y):
            raise ValueError("NaN observation: corrupted stream")
        self._t += 1
        self._window.append(y)
        if self._grid is None:
            self._buffer.append(y)
            if len(self._buffer) == self.probation:
                probs = geometric_probabilities(self.num_quantiles, self.probation)
                self._install_grid(fit_quantiles(self._buffer, probs))
                self._buffer = []
            return PROBATION

        if int(self._k.max()) + 1 >= self._cap:
            self._grow()
        self._local_n += 1
        np.less_equal(y, self._values, out=self._xbits_buf, casting="unsafe")
        if self.mode == "known":
            ssum, smax, arg = _kernels.bank_step_known(
                self._ins_t, self._ins_ones, self._k, self._ones, self._theta, self._local_n, self._xbits_buf, self._stats_buf
            )
        else:
            ssum, smax, arg = _kernels.bank_step_unknown(
                self._ins_t, self._ins_ones, self._ins_c, self._k, self._ones, self._local_n, self._xbits_buf, self._stats_buf
            )
        self._sum_stat = float(ssum)
        self._max_stat = float(smax)
        hit_sum = ssum >= self.thresholds.xi_sum
        hit_max = smax >= self.thresholds.xi_max
        if not (hit_sum or hit_max):
            return None
        if self.mode == "known":
            _, tau_local = _kernels.detector_best_known(
                self._ins_t, self._ins_ones, self._k, self._ones, self._theta, self._local_n, arg
            )
        else:
            _, tau_local = _kernels.detector_best_unknown(
                self._ins_t, self._ins_ones, self._ins_c, self._k, self._ones, self._local_n, arg
            )
        return DetectionEvent(
            time=self._t,
            trigger="both" if (hit_sum and hit_max) else ("sum" if hit_sum else "max"),
            sum_stat=float(ssum),
            max_stat=float(smax),
            max_quantile_index=int(arg),
            tau_hat=self._monitor_offset + int(tau_local),
        )

    def _grow(self) -> None:
        new_cap = 2 * self._cap
        for name in ("_ins_t", "_ins_ones", "_ins_c"):
            arr = getattr(self, name)
            if arr is None:
                continue
            grown = np.zeros(arr.shape[:2] + (new_cap,), dtype=arr.dtype)
            grown[:, :, : self._cap] = arr
            setattr(self, name, grown)
        self._cap = new_cap

    # -- checkpoint / resume -------------------------------------------------

    def state_to_json(self) -> dict[str, Any]:
        """Full snapshot: grid, thresholds, buffers, and per-detector piece lists."""
        state: dict[str, Any] = {
            "schema_version": STATE_SCHEMA_VERSION,
            "mode": self.mode,
            "num_quantiles": self.num_quantiles,
            "probation": self.probation,
            "thresholds": self.thresholds.to_json(),
            "t": self._t,
            "sum_stat": self._sum_stat,
            "max_stat": self._max_stat,
            "window": list(self._window),
            "buffer": list(self._buffer),
            "grid": None if self._grid is None else self._grid.to_json(),
        }
        if self._grid is not None:
            detectors = []
            for m in range(len(self._grid)):
                sides = []
                for s in range(2):
                    k = int(self._k[m, s])
                    side: dict[str, Any] = {
                        "ins_t": self._ins_t[m, s, :k].tolist(),
                        "ins_ones": self._ins_ones[m, s, :k].tolist(),
                        "ones": int(self._ones[m, s]),
                    }
                    if self._ins_c is not None:
                        side["ins_c"] = self._ins_c[m, s, :k].tolist()
                    sides.append(side)
                detectors.append(sides)
            state["monitor_offset"] = self._monitor_offset
            state["detectors"] = detectors
        return state

    @classmethod
    def state_from_json(cls, obj: Mapping[str, Any]) -> "NpFocus":
        version = obj.get("schema_version", STATE_SCHEMA_VERSION)
        if version != STATE_SCHEMA_VERSION:
            raise ValueError(f"unsupported state schema_version {version!r}")
        det = cls(
            Thresholds.from_json(obj["thresholds"]),
            num_quantiles=int(obj["num_quantiles"]),
            probation=int(obj["probation"]),
            mode=obj["mode"],
        )
        det._t = int(obj["t"])
        det._window = deque((float(v) for v in obj["window"]), maxlen=det.probation)
        det._buffer = [float(v) for v in obj["buffer"]]
        if obj["grid"] is not None:
            det._install_grid(QuantileGrid.from_json(obj["grid"]))
            det._monitor_offset = int(obj["monitor_offset"])
            det._local_n = det._t - det._monitor_offset
            lists = obj["detectors"]
            max_k = max(len(side["ins_t"]) for sides in lists for side in sides)
            while det._cap <= max_k + 1:
                det._grow()
            for m, sides in enumerate(lists):
                for s, side in enumerate(sides):
                    k = len(side["ins_t"])
                    det._k[m, s] = k
                    det._ins_t[m, s, :k] = side["ins_t"]
                    det._ins_ones[m, s, :k] = side["ins_ones"]
                    det._ones[m, s] = side["ones"]
                    if det._ins_c is not None:
                        det._ins_c[m, s, :k] = side["ins_c"]
        det._sum_stat = float(obj["sum_stat"])
        det._max_stat = float(obj["max_stat"])
        return det


@dataclass(frozen=True)
class StreamResult:
    """Batch-run outcome: events in order, plus optional per-step aggregates.

    sums/maxs align with the input (1-indexed time t is index t-1) and are NaN
    during probation stretches.
    """

    events: tuple[DetectionEvent, ...]
    sums: np.ndarray | None
    maxs: np.ndarray | None


def run_stream(
    ys,
    thresholds: Thresholds,
    *,
    num_quantiles: int = 15,
    probation: int = 100,
    mode: str = "known",
    grid: QuantileGrid | None = None,
    collect_stats: bool = False,
    restart_on_detection: bool = True,
    max_events: int | None = None,
) -> StreamResult:
    """Run the full pipeline over a whole array without leaving compiled code.

    Identical semantics (and bit-identical statistics) to feeding NpFocus one
    observation at a time, including grid refits from the rolling window after
    each detection when restart_on_detection is set.
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    if probation < 2:
        raise ValueError("probation must be >= 2")
    ys = np.ascontiguousarray(ys, dtype=float)
    if np.isnan(ys).any():
        raise ValueError("NaN observation: corrupted stream")
    n = ys.shape[0]
    sums = np.full(n, math.nan) if collect_stats else None
    maxs = np.full(n, math.nan) if collect_stats else None
    events: list[DetectionEvent] = []
    pos = 0
    current = grid
    while pos < n:
        if current is None:
            if n - pos < probation:
                break  # stream ends inside probation
            train = ys[pos : pos + probation]
            probs = geometric_probabilities(num_quantiles, probation)
            current = fit_quantiles(train, probs)
            pos += probation
            continue
        seg = ys[pos:]
        seg_sums = np.empty(seg.shape[0])
        seg_maxs = np.empty(seg.shape[0])
        values = np.asarray(current.values)
        if mode == "known":
            theta = _theta_pairs(current.probs)
            stop_t, arg, tau = _kernels.bank_run_known(
                seg, values, theta, thresholds.xi_sum, thresholds.xi_max, seg_sums, seg_maxs
            )
        else:
            stop_t, arg, tau = _kernels.bank_run_unknown(
                seg, values, thresholds.xi_sum, thresholds.xi_max, seg_sums, seg_maxs
            )
        took = stop_t if stop_t else seg.shape[0]
        if collect_stats:
            sums[pos : pos + took] = seg_sums[:took]
            maxs[pos : pos + took] = seg_maxs[:took]
        if not stop_t:
            break
        ssum = float(seg_sums[stop_t - 1])
        smax = float(seg_maxs[stop_t - 1])
        hit_sum = ssum >= thresholds.xi_sum
        hit_max = smax >= thresholds.xi_max
        events.append(
            DetectionEvent(
                time=pos + stop_t,
                trigger="both" if (hit_sum and hit_max) else ("sum" if hit_sum else "max"),
                sum_stat=ssum,
                max_stat=smax,
                max_quantile_index=int(arg),
                tau_hat=pos + int(tau),
            )
        )
        pos += stop_t
        if not restart_on_detection or (max_events is not None and len(events) >= max_events):
            break
        window = ys[max(0, pos - probation) : pos]
        if window.shape[0] >= 2:
            probs = geometric_probabilities(num_quantiles, window.shape[0])
            current = fit_quantiles(window, probs)
        else:
            current = None
    return StreamResult(events=tuple(events), sums=sums, maxs=maxs)
