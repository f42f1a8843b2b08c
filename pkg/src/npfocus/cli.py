"""Command-line interface: simulate scenario streams, calibrate thresholds,
detect changes in files or stdin, run benchmark experiments, and query the
brute-force reference implementations.

All output is machine-readable (NDJSON events, JSON reports, CSV curves) and
byte-identical across re-runs with the same flags: no timestamps, no
environment-dependent fields, floats rendered by shortest round-trip repr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from typing import Any, Sequence

import numpy as np

from .calibrate import NullSampler, calibrate
from .detector import Thresholds, run_stream
from .experiments import ExperimentConfig, elbow_sweep, run_experiment
from .oracle import convex_minorant_oracle, glr_oracle, glr_oracle_unknown
from .quantiles import QuantileGrid, fit_quantiles, geometric_probabilities
from .scenarios import SCENARIO_NAMES, ScenarioSpec, generate

__all__ = ["main"]

BUNDLE_SCHEMA_VERSION = 1


def _fail(message: str) -> "SystemExit":
    print(f"error: {message}", file=sys.stderr)
    return SystemExit(2)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _fail(f"cannot read {path}: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_json(path: str) -> Any:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise _fail(f"malformed JSON in {path}: {exc}") from exc


def _dump_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _parse_values(text: str, path: str, column: int | None) -> np.ndarray:
    """One decimal per line, or CSV with --column; blanks and NaN are hard errors."""
    values: list[float] = []
    lines = text.splitlines()
    for ln, line in enumerate(lines, start=1):
        if line.strip() == "":
            raise _fail(f"{path}:{ln}: blank line in input stream")
        if column is not None:
            fields = next(csv.reader([line]))
            if column >= len(fields):
                raise _fail(f"{path}:{ln}: no column {column} (row has {len(fields)})")
            token = fields[column]
        else:
            token = line.strip()
        try:
            v = float(token)
        except ValueError as exc:
            raise _fail(f"{path}:{ln}: not a number: {token!r}") from exc
        if math.isnan(v):
            raise _fail(f"{path}:{ln}: NaN observation: corrupted stream")
        values.append(v)
    return np.asarray(values)


def _scenario_from_args(args: argparse.Namespace, cfg: dict[str, Any]) -> ScenarioSpec:
    def pick(flag: str, default=None):
        v = getattr(args, flag, None)
        return cfg.get(flag, default) if v is None else v

    name = pick("scenario")
    n = pick("n")
    tau = pick("tau")
    seed = pick("seed", 0)
    if name is None or n is None or tau is None:
        raise _fail("scenario, n, and tau are required (flags or --config)")
    params = dict(cfg.get("params", {}))
    for item in getattr(args, "param", None) or []:
        key, _, raw = item.partition("=")
        if not _:
            raise _fail(f"--param expects key=value, got {item!r}")
        try:
            params[key] = float(raw)
        except ValueError as exc:
            raise _fail(f"--param {key}: not a number: {raw!r}") from exc
    try:
        return ScenarioSpec(name=name, n=int(n), tau=int(tau), seed=int(seed), params=params)
    except ValueError as exc:
        raise _fail(str(exc)) from exc


def _load_config(args: argparse.Namespace) -> dict[str, Any]:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise _fail(f"config {path} must be a JSON object")
    return obj


def _pick(args: argparse.Namespace, cfg: dict[str, Any], flag: str, default):
    v = getattr(args, flag, None)
    if v is not None:
        return v
    return cfg.get(flag, default)


# -- subcommands -------------------------------------------------------------


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    spec = _scenario_from_args(args, cfg)
    spec = replace(spec, replicate=int(_pick(args, cfg, "replicate", 0)))
    ys = generate(spec)
    _write_text(args.out, "".join(repr(float(v)) + "\n" for v in ys))
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    mode = _pick(args, cfg, "mode", "known")
    probation = int(_pick(args, cfg, "probation", 100))
    quantiles = int(_pick(args, cfg, "quantiles", 15))
    arl = _pick(args, cfg, "arl", None)
    replicates = int(_pick(args, cfg, "replicates", 100))
    if arl is None:
        raise _fail("--arl is required")
    training_path = _pick(args, cfg, "training", None)
    if training_path is not None:
        training = _parse_values(_read_text(training_path), training_path, args.column)
        seed = int(_pick(args, cfg, "seed", 0))
        sampler = NullSampler.bootstrap(training, seed)
        grid_source = training[:probation] if training.size >= probation else training
        if grid_source.size < 2:
            raise _fail("training data too short to fit a quantile grid")
        grid = fit_quantiles(grid_source, geometric_probabilities(quantiles, grid_source.size))
    else:
        spec = _scenario_from_args(args, cfg)
        sampler = NullSampler.simulate(spec)
        from . import rng
        from .scenarios import pre_change_draws

        train = pre_change_draws(spec, 0, probation, rng.PURPOSE_CAL_TRAIN)
        grid = fit_quantiles(train, geometric_probabilities(quantiles, probation))
    thresholds = calibrate(sampler, grid, int(arl), replicates, mode)
    bundle = {
        "schema_version": BUNDLE_SCHEMA_VERSION,
        "mode": mode,
        "thresholds": thresholds.to_json(),
        "grid": grid.to_json(),
    }
    _write_text(args.out, _dump_json(bundle))
    return 0


def _thresholds_from_file(path: str) -> tuple[Thresholds, QuantileGrid | None, str | None]:
    """Accept either a bare thresholds object or a calibration bundle."""
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise _fail(f"{path}: expected a JSON object")
    if "xi_sum" in obj:
        return Thresholds.from_json(obj), None, None
    if "thresholds" in obj:
        grid = QuantileGrid.from_json(obj["grid"]) if obj.get("grid") is not None else None
        return Thresholds.from_json(obj["thresholds"]), grid, obj.get("mode")
    raise _fail(f"{path}: neither a thresholds object nor a calibration bundle")


def _cmd_detect(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    thr_path = _pick(args, cfg, "thresholds", None)
    if thr_path is None:
        raise _fail("--thresholds is required")
    thresholds, bundle_grid, bundle_mode = _thresholds_from_file(thr_path)
    grid = bundle_grid
    grid_path = _pick(args, cfg, "grid", None)
    if grid_path is not None:
        grid = QuantileGrid.from_json(_load_json(grid_path))
    mode = _pick(args, cfg, "mode", None) or bundle_mode or "known"
    probation = int(_pick(args, cfg, "probation", 100))
    quantiles = int(_pick(args, cfg, "quantiles", 15))
    input_path = _pick(args, cfg, "input", None)
    if input_path is None:
        raise _fail("--input is required")
    column = _pick(args, cfg, "column", None)
    ys = _parse_values(_read_text(input_path), input_path, None if column is None else int(column))
    result = run_stream(
        ys,
        thresholds,
        num_quantiles=quantiles,
        probation=probation,
        mode=mode,
        grid=grid,
        collect_stats=True,
        restart_on_detection=True,
    )
    by_time = {ev.time: ev for ev in result.events}
    out: list[str] = []
    for t in range(1, ys.shape[0] + 1):
        ev = by_time.get(t)
        if args.events_only and ev is None:
            continue
        s, m = result.sums[t - 1], result.maxs[t - 1]
        row = {
            "t": t,
            "sum": None if math.isnan(s) else s,
            "max": None if math.isnan(m) else m,
            "detected": ev is not None,
            "tau_hat": None if ev is None else ev.tau_hat,
        }
        if ev is not None:
            row["trigger"] = ev.trigger
            row["quantile_index"] = ev.max_quantile_index
        out.append(json.dumps(row, sort_keys=True))
    _write_text(args.out, "".join(line + "\n" for line in out))
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    spec = _scenario_from_args(args, cfg)
    thr_path = _pick(args, cfg, "thresholds", None)
    thresholds = _thresholds_from_file(thr_path)[0] if thr_path is not None else None
    try:
        config = ExperimentConfig(
            scenario=spec,
            replicates=int(_pick(args, cfg, "replicates", 100)),
            target_arl=int(_pick(args, cfg, "arl", 10_000)),
            probation=int(_pick(args, cfg, "probation", 100)),
            num_quantiles=int(_pick(args, cfg, "quantiles", 15)),
            mode=_pick(args, cfg, "mode", "known"),
            seed=spec.seed,
            calibration_replicates=int(_pick(args, cfg, "calibration_replicates", 100)),
            training_n=int(_pick(args, cfg, "training_n", 5000)),
            thresholds=thresholds,
        )
    except ValueError as exc:
        raise _fail(str(exc)) from exc
    m_values = _pick(args, cfg, "m_values", None)
    if m_values is not None:
        if isinstance(m_values, str):
            m_values = [int(v) for v in m_values.split(",") if v.strip()]
        rows = elbow_sweep(config, m_values)
        payload = {"schema_version": 1, "config": config.to_json(), "rows": rows}
        _write_text(args.out, _dump_json(payload))
        return 0
    report = run_experiment(config)
    _write_text(args.out, _dump_json(report.to_json()))
    if args.curve_out is not None:
        lines = ["t,fraction\n"] + [f"{t},{frac!r}\n" for t, frac in report.detection_curve]
        _write_text(args.curve_out, "".join(lines))
    return 0


def _cmd_debug(args: argparse.Namespace) -> int:
    if args.bits is not None:
        try:
            bits = [int(tok) for tok in args.bits.split(",") if tok.strip() != ""]
        except ValueError as exc:
            raise _fail(f"--bits expects comma-separated 0/1, got {args.bits!r}") from exc
    elif args.input is not None:
        bits = [int(v) for v in _parse_values(_read_text(args.input), args.input, args.column)]
    else:
        raise _fail("one of --bits or --input is required")
    if any(b not in (0, 1) for b in bits):
        raise _fail("bit stream must contain only 0 and 1")
    payload: dict[str, Any] = {"n": len(bits)}
    if args.theta0 is not None:
        res = glr_oracle(bits, args.theta0)
        payload["known"] = {"stat": res.stat, "tau": res.argmax_tau, "per_tau": list(res.per_tau)}
        payload["survivor_taus"] = _survivor_taus(bits, args.theta0)
    if args.unknown:
        res = glr_oracle_unknown(bits)
        payload["unknown"] = {"stat": res.stat, "tau": res.argmax_tau, "per_tau": list(res.per_tau)}
    if args.minorant:
        payload["minorant_extremes"] = [int(t) for t in convex_minorant_oracle(bits)]
    if len(payload) == 1:
        raise _fail("nothing to compute: pass --theta0, --unknown, or --minorant")
    _write_text(args.out, _dump_json(payload))
    return 0


def _survivor_taus(bits: Sequence[int], theta0: float) -> list[int]:
    """Candidates the pruned recursion keeps: minorant extreme points whose
    success ratio along the edge to the next extreme point exceeds theta0,
    plus the always-present fresh candidate at n."""
    ext = convex_minorant_oracle(bits)
    sums = np.concatenate([[0], np.cumsum(bits)])
    keep = []
    for j in range(len(ext) - 1):
        u, v = int(ext[j]), int(ext[j + 1])
        if (sums[v] - sums[u]) / (v - u) > theta0:
            keep.append(u)
    keep.append(int(ext[-1]))
    return keep


# -- parser ------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of defaults; explicit flags win")
    p.add_argument("--out", help="output path (default stdout)")


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", choices=SCENARIO_NAMES)
    p.add_argument("--n", type=int)
    p.add_argument("--tau", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="override a scenario parameter")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npfocus",
        description="Nonparametric sequential change detection over univariate streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a scenario stream, one value per line")
    _add_scenario_flags(p)
    p.add_argument("--replicate", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="tune thresholds to a target average run length")
    _add_scenario_flags(p)
    p.add_argument("--arl", type=int, help="target average run length")
    p.add_argument("--replicates", type=int, help="null sequences to draw")
    p.add_argument("--mode", choices=("known", "unknown"))
    p.add_argument("--probation", type=int)
    p.add_argument("--quantiles", type=int)
    p.add_argument("--training", help="bootstrap null sequences from this data file instead of a scenario")
    p.add_argument("--column", type=int, help="0-based CSV column of --training")
    _add_common(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("detect", help="stream a file through the detector, NDJSON per observation")
    p.add_argument("--input", help="data file, one value per line, or - for stdin")
    p.add_argument("--column", type=int, help="0-based CSV column to read")
    p.add_argument("--thresholds", help="thresholds JSON or calibration bundle")
    p.add_argument("--grid", help="quantile grid JSON (skips probation fitting)")
    p.add_argument("--mode", choices=("known", "unknown"))
    p.add_argument("--probation", type=int)
    p.add_argument("--quantiles", type=int)
    p.add_argument("--events-only", action="store_true", help="emit only detection rows")
    _add_common(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("bench", help="replicated scenario experiment with a JSON report")
    _add_scenario_flags(p)
    p.add_argument("--replicates", type=int)
    p.add_argument("--arl", type=int)
    p.add_argument("--probation", type=int)
    p.add_argument("--quantiles", type=int)
    p.add_argument("--mode", choices=("known", "unknown"))
    p.add_argument("--calibration-replicates", dest="calibration_replicates", type=int)
    p.add_argument("--training-n", dest="training_n", type=int, help="pre-change training draw for the shared grid")
    p.add_argument("--thresholds", help="skip calibration, use these thresholds")
    p.add_argument("--m-values", dest="m_values", help="comma-separated grid sizes: emit the elbow table instead")
    p.add_argument("--curve-out", help="also write the detection curve as CSV")
    _add_common(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("debug", help="brute-force reference statistics for a 0/1 stream")
    p.add_argument("--bits", help="comma-separated 0/1 values")
    p.add_argument("--input", help="file of 0/1 values, one per line")
    p.add_argument("--column", type=int)
    p.add_argument("--theta0", type=float, help="known null rate: report the exact scan statistic")
    p.add_argument("--unknown", action="store_true", help="report the null-rate-free scan statistic")
    p.add_argument("--minorant", action="store_true", help="report convex-minorant extreme points")
    _add_common(p)
    p.set_defaults(func=_cmd_debug)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
