"""Command-line interface: run benchmarks, materialize synth data, score files."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .core import STD_FLOOR
from .harness import IngestionError, load_config, parse_timestamp, run_and_report, synth_from_dict
from .metrics import wql as wql_metric
from .synth import generate


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except Exception as err:
        print(f"error: could not load config: {err}", file=sys.stderr)
        return 1
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.output_dir is not None:
        config = replace(config, output_dir=args.output_dir)
    try:
        bench, paths = run_and_report(config, jobs=args.jobs)
    except IngestionError as err:
        print("error: dataset ingestion failed", file=sys.stderr)
        for ds_id, msg in sorted(err.failures.items()):
            print(f"  {ds_id}: {msg}", file=sys.stderr)
        return 1
    print(f"scored {len(bench.records)} records")
    if bench.ranks:
        best = min(bench.ranks.items(), key=lambda kv: kv[1])
        print(f"best average rank: {best[0]} ({best[1]:.3f})")
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def _cmd_synth(args) -> int:
    with open(args.spec) as fh:
        raw = yaml.safe_load(fh) or {}
    spec = synth_from_dict(raw)
    series = generate(spec, series_id=raw.get("id", Path(args.spec).stem))
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    cov_names = sorted(series.covariates)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "value", *cov_names])
        for i, ts in enumerate(series.timestamps):
            writer.writerow(
                [int(ts), repr(float(series.values[i])), *(repr(float(series.covariates[c][i])) for c in cov_names)]
            )
    print(f"wrote {len(series)} rows to {out}")
    return 0


def _read_value_csv(path, timestamp_column: str, value_column: str):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or timestamp_column not in reader.fieldnames:
            raise ValueError(f"{path}: missing column {timestamp_column!r}")
        if value_column not in reader.fieldnames:
            raise ValueError(f"{path}: missing column {value_column!r}")
        quantile_cols = [c for c in reader.fieldnames if c.startswith("q0.")]
        out: dict = {}
        quants: dict = {}
        for row in reader:
            key = str(parse_timestamp(row[timestamp_column].strip()))
            text = (row.get(value_column) or "").strip()
            if not text:
                continue
            out[key] = float(text)
            for c in quantile_cols:
                qtext = (row.get(c) or "").strip()
                if qtext:
                    quants.setdefault(float(c[1:]), {})[key] = float(qtext)
    return out, quants


def _cmd_score(args) -> int:
    truth, _ = _read_value_csv(args.truth, args.timestamp_column, args.value_column)
    pred, quants = _read_value_csv(args.pred, args.timestamp_column, args.value_column)
    keys = sorted(set(truth) & set(pred))
    if not keys:
        print("error: no overlapping scored timestamps", file=sys.stderr)
        return 1
    t = np.array([truth[k] for k in keys])
    p = np.array([pred[k] for k in keys])
    std = max(float(np.std(t)), STD_FLOOR)
    result = {
        "n_points": len(keys),
        "mae": float(np.mean(np.abs(t - p))),
        "znorm_mae": float(np.mean(np.abs(t - p)) / std),
        "truth_std": std,
    }
    complete_levels = sorted(a for a, m in quants.items() if all(k in m for k in keys))
    if complete_levels:
        preds = {a: np.array([quants[a][k] for k in keys]) for a in complete_levels}
        try:
            result["wql"] = wql_metric(preds, t, complete_levels)
            result["wql_levels"] = complete_levels
        except ValueError:
            pass
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tixbench",
        description="Zero-shot time-series imputation benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a benchmark config and write reports")
    p_run.add_argument("config", help="YAML run configuration")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_run.add_argument("--output-dir", default=None, help="override the config output directory")
    p_run.set_defaults(func=_cmd_run)

    p_synth = sub.add_parser("synth", help="materialize a synthetic dataset as CSV")
    p_synth.add_argument("spec", help="YAML synthetic-series spec")
    p_synth.add_argument("-o", "--output", required=True, help="output CSV path")
    p_synth.set_defaults(func=_cmd_synth)

    p_score = sub.add_parser("score", help="score a prediction CSV against a truth CSV")
    p_score.add_argument("truth")
    p_score.add_argument("pred")
    p_score.add_argument("--timestamp-column", default="timestamp")
    p_score.add_argument("--value-column", default="value")
    p_score.set_defaults(func=_cmd_score)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
