"""Benchmark harness: config files, CSV ingestion, the run loop, reports.

A run walks every configured dataset through a chronological split, slides
four-week windows over the test slice, applies each missingness scenario
with a seed derived by stable-hashing the run seed with the dataset id,
segment start and scenario label (so parallel and serial execution agree),
scores every imputer, and writes machine-readable and human-readable
reports. Everything downstream of the config is deterministic; the only
volatile report field is the wall-clock timestamp, which is excluded from
the content digest.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .core import FrequencySpec, TimeSeries, chrono_split, extract_segments, masked_norm_stats
from .imputers import make_imputer
from .masking import DEFAULT_SCENARIOS, Scenario, apply_scenario
from .metrics import ScoreRecord, aggregate, average_ranks, wql, znorm_mae
from .synth import Component, SynthSpec
from .synth import generate as synth_generate

RANDOM_BASIS_CAVEAT = (
    "tix_random_basis uses a seeded random Fourier basis as a surrogate for a "
    "pretrained representation; its scores characterize the surrogate only."
)
NORMALIZATION_NOTE = (
    "z-normalization uses per-segment visible-context statistics (held-out values never enter)."
)
CONTEXT_NOTE = "regression context = all observed points of the segment being imputed."


class IngestionError(RuntimeError):
    """Raised when one or more datasets fail to load; carries a per-dataset summary."""

    def __init__(self, failures: dict[str, str]):
        self.failures = dict(failures)
        lines = "; ".join(f"{k}: {v}" for k, v in sorted(failures.items()))
        super().__init__(f"dataset ingestion failed ({lines})")


def stable_seed(*parts) -> int:
    """64-bit seed from a stable hash of the identifying parts."""
    payload = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(payload.encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class DatasetSpec:
    """One dataset entry: either a CSV path or an inline synthetic spec."""

    id: str
    path: str | None = None
    synth: SynthSpec | None = None
    timestamp_column: str = "timestamp"
    value_column: str = "value"
    covariate_columns: tuple[str, ...] = ()
    steps_per_day: int = 0
    seasonal_period: int = 0
    min_std_filter: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "covariate_columns", tuple(self.covariate_columns))
        if (self.path is None) == (self.synth is None):
            raise ValueError(f"dataset {self.id!r} needs exactly one of path or synth")
        if self.path is not None and self.steps_per_day < 1:
            raise ValueError(f"dataset {self.id!r}: steps_per_day required for CSV datasets")


@dataclass(frozen=True)
class ImputerSpec:
    """Registry id plus parameter overrides; ``name`` keys the report columns."""

    id: str
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name:
            object.__setattr__(self, "name", self.id)


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[DatasetSpec, ...]
    imputers: tuple[ImputerSpec, ...]
    scenarios: tuple[Scenario, ...] = DEFAULT_SCENARIOS
    seed: int = 0
    splits: tuple[float, float, float] = (0.7, 0.1, 0.2)
    segment_len_days: int = 28
    stride_days: tuple[float, float] = (0.5, 2.0)
    output_dir: str = "out"
    rank_metric: str = "mae"

    def __post_init__(self) -> None:
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "imputers", tuple(self.imputers))
        object.__setattr__(self, "scenarios", tuple(self.scenarios) or DEFAULT_SCENARIOS)
        if not self.datasets:
            raise ValueError("config needs at least one dataset")
        if not self.imputers:
            raise ValueError("config needs at least one imputer")
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise ValueError("scenario labels must be unique")
        names = [im.name for im in self.imputers]
        if len(set(names)) != len(names):
            raise ValueError("imputer names must be unique")
        ids = [d.id for d in self.datasets]
        if len(set(ids)) != len(ids):
            raise ValueError("dataset ids must be unique")
        if self.rank_metric not in ("mae", "wql"):
            raise ValueError("rank_metric must be 'mae' or 'wql'")


def synth_from_dict(raw: dict) -> SynthSpec:
    freq = FrequencySpec(
        steps_per_day=int(raw["steps_per_day"]),
        seasonal_period=int(raw.get("seasonal_period", 0)),
    )
    comps = tuple(
        Component(
            kind=str(c["kind"]),
            amplitude=float(c.get("amplitude", 1.0)),
            period_ticks=None if c.get("period_ticks") is None else float(c["period_ticks"]),
            noise_std=None if c.get("noise_std") is None else float(c["noise_std"]),
            covariate_gain=None if c.get("covariate_gain") is None else float(c["covariate_gain"]),
        )
        for c in raw["components"]
    )
    return SynthSpec(
        length_days=int(raw["length_days"]),
        freq=freq,
        components=comps,
        seed=int(raw.get("seed", 0)),
    )


def config_from_dict(raw: dict, base_dir: Path | None = None) -> RunConfig:
    base = Path(base_dir) if base_dir is not None else Path(".")
    datasets = []
    for d in raw.get("datasets", []):
        synth = synth_from_dict(d["synth"]) if "synth" in d else None
        path = d.get("path")
        if path is not None:
            p = Path(path)
            path = str(p if p.is_absolute() else base / p)
        datasets.append(
            DatasetSpec(
                id=str(d["id"]),
                path=path,
                synth=synth,
                timestamp_column=str(d.get("timestamp_column", "timestamp")),
                value_column=str(d.get("value_column", "value")),
                covariate_columns=tuple(d.get("covariate_columns", ())),
                steps_per_day=int(d.get("steps_per_day", 0)),
                seasonal_period=int(d.get("seasonal_period", 0)),
                min_std_filter=float(d.get("min_std_filter", 0.0)),
            )
        )
    imputers = tuple(
        ImputerSpec(id=str(i["id"]), name=str(i.get("name", "")), params=dict(i.get("params", {})))
        for i in raw.get("imputers", [])
    )
    scenarios = tuple(
        Scenario(kind=str(s["kind"]), param=float(s["param"]), label=str(s["label"]))
        for s in raw.get("scenarios", [])
    )
    segment = raw.get("segment", {})
    stride = segment.get("stride", (0.5, 2.0))
    return RunConfig(
        datasets=tuple(datasets),
        imputers=imputers,
        scenarios=scenarios or DEFAULT_SCENARIOS,
        seed=int(raw.get("seed", 0)),
        splits=tuple(float(f) for f in raw.get("splits", (0.7, 0.1, 0.2))),
        segment_len_days=int(segment.get("len_days", 28)),
        stride_days=(float(stride[0]), float(stride[1])),
        output_dir=str(raw.get("output_dir", "out")),
        rank_metric=str(raw.get("rank_metric", "mae")),
    )


def load_config(path) -> RunConfig:
    """Parse a YAML run configuration; omitted keys take the protocol defaults."""
    path = Path(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    return config_from_dict(raw, base_dir=path.parent)


def config_digest(config: RunConfig) -> str:
    # output_dir has no effect on any result, so it does not identify the
    # experiment.
    payload = asdict(config)
    payload.pop("output_dir", None)
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def parse_timestamp(text: str):
    try:
        return int(text)
    except ValueError:
        return datetime.fromisoformat(text)


def ingest_csv(
    path,
    freq: FrequencySpec,
    timestamp_column: str = "timestamp",
    value_column: str = "value",
    covariate_columns: tuple[str, ...] = (),
    series_id: str | None = None,
) -> TimeSeries:
    """Load a comma-separated file onto the regular tick grid.

    The timestamp column may hold integers (taken as raw grid ticks) or
    ISO-8601 datetimes, whose grid step is inferred as the smallest positive
    spacing; every other spacing must be a whole multiple of it. Skipped
    ticks are materialized as unobserved. Empty cells mean missing: in the
    target they clear the observation mask, in covariates they stay NaN.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file (header row required)")
        for col in (timestamp_column, value_column, *covariate_columns):
            if col not in reader.fieldnames:
                raise ValueError(f"{path}: missing column {col!r}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")

    stamps = [parse_timestamp(r[timestamp_column]) for r in rows]
    kinds = {type(s) for s in stamps}
    if len(kinds) > 1:
        raise ValueError(f"{path}: mixed timestamp formats")
    order = np.argsort(np.array(stamps, dtype=object), kind="stable")
    stamps = [stamps[i] for i in order]
    rows = [rows[i] for i in order]
    if len(set(stamps)) != len(stamps):
        raise ValueError(f"{path}: duplicate timestamps")

    if isinstance(stamps[0], datetime):
        # Infer the grid step as the smallest positive spacing; every other
        # spacing must be a whole multiple of it (a gap on the same grid).
        offsets = np.array([int((s - stamps[0]).total_seconds() * 1e6) for s in stamps], dtype=np.int64)
        if len(offsets) > 1:
            diffs = np.diff(offsets)
            step = int(diffs.min())
            if step <= 0 or np.any(diffs % step != 0):
                raise ValueError(f"{path}: non-uniform sampling")
            ticks = offsets // step
        else:
            ticks = offsets
    else:
        # Integer timestamps are raw grid ticks; absent ticks are gaps.
        ticks = np.array(stamps, dtype=np.int64) - int(stamps[0])

    n = int(ticks[-1]) + 1
    values = np.full(n, np.nan)
    obs = np.zeros(n, dtype=bool)
    covs = {c: np.full(n, np.nan) for c in covariate_columns}

    def _cell(row, col):
        text = (row.get(col) or "").strip()
        if not text:
            return None
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"{path}: non-numeric cell {text!r} in column {col!r}") from None

    for tick, row in zip(ticks, rows):
        v = _cell(row, value_column)
        if v is not None:
            values[tick] = v
            obs[tick] = True
        for c in covariate_columns:
            cv = _cell(row, c)
            if cv is not None:
                covs[c][tick] = cv

    return TimeSeries(
        id=series_id or path.stem,
        timestamps=np.arange(n, dtype=np.int64),
        values=values,
        obs_mask=obs,
        freq=freq,
        covariates=covs,
    )


def load_dataset(spec: DatasetSpec) -> TimeSeries:
    if spec.synth is not None:
        return synth_generate(spec.synth, series_id=spec.id)
    freq = FrequencySpec(steps_per_day=spec.steps_per_day, seasonal_period=spec.seasonal_period)
    return ingest_csv(
        spec.path,
        freq,
        timestamp_column=spec.timestamp_column,
        value_column=spec.value_column,
        covariate_columns=spec.covariate_columns,
        series_id=spec.id,
    )


@dataclass(frozen=True)
class BenchReport:
    records: tuple[ScoreRecord, ...]
    aggregates: tuple[dict, ...]
    ranks: dict[str, float]
    meta: dict


def _score_task(args) -> list[ScoreRecord]:
    ds_id, segment, scenario, run_seed, imputer_specs = args
    mask_seed = stable_seed(run_seed, ds_id, segment.start, scenario.label)
    try:
        masked = apply_scenario(segment, scenario, mask_seed)
    except ValueError as err:
        if "infeasible" in str(err):
            return []
        raise
    truth = masked.values[masked.eval_mask]
    if len(truth) == 0:
        return []
    records = []
    for spec in imputer_specs:
        imputation = make_imputer(spec.id, **spec.params)(masked)
        mae = znorm_mae(truth, imputation.point, masked.norm)
        wql_value = None
        if imputation.quantiles is not None:
            try:
                wql_value = wql(imputation.quantiles, truth, sorted(imputation.quantiles))
            except ValueError:
                wql_value = None
        records.append(
            ScoreRecord(
                dataset=ds_id,
                imputer_id=spec.name,
                scenario_label=scenario.label,
                n_points=len(truth),
                mae=mae,
                wql=wql_value,
            )
        )
    return records


def _record_sort_key(r: ScoreRecord):
    return (
        r.dataset,
        r.imputer_id,
        r.scenario_label,
        r.n_points,
        r.mae,
        -np.inf if r.wql is None else r.wql,
    )


def run(config: RunConfig, jobs: int = 1) -> BenchReport:
    """Execute the full dataset x scenario x imputer matrix.

    Work items are independent and may run in parallel; per-item seeds hash
    identifiers rather than iteration order, and records are stably sorted
    before reporting, so any degree of parallelism reproduces the serial
    output byte for byte.
    """
    failures: dict[str, str] = {}
    loaded: list[tuple[DatasetSpec, TimeSeries]] = []
    for ds in config.datasets:
        try:
            loaded.append((ds, load_dataset(ds)))
        except Exception as err:
            failures[ds.id] = str(err)
    if failures:
        raise IngestionError(failures)

    tasks = []
    for ds, series in loaded:
        _, _, test = chrono_split(series, config.splits)
        segments = extract_segments(
            test,
            seg_len_days=config.segment_len_days,
            stride_min_days=config.stride_days[0],
            stride_max_days=config.stride_days[1],
            seed=stable_seed(config.seed, ds.id, "segments"),
        )
        if ds.min_std_filter > 0:
            segments = [
                s
                for s in segments
                if masked_norm_stats(s.values, s.obs_mask).std >= ds.min_std_filter
            ]
        for segment in segments:
            for scenario in config.scenarios:
                tasks.append((ds.id, segment, scenario, config.seed, config.imputers))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_score_task, tasks))
    else:
        chunks = [_score_task(t) for t in tasks]
    records = sorted((r for chunk in chunks for r in chunk), key=_record_sort_key)

    by_scenario = aggregate(records, ("dataset", "imputer_id", "scenario_label"))
    by_dataset = aggregate(by_scenario, ("dataset", "imputer_id"))
    overall = aggregate(by_dataset, ("imputer_id",))
    aggregates = (
        [{"level": "dataset_scenario", **row} for row in by_scenario]
        + [{"level": "dataset", **row} for row in by_dataset]
        + [{"level": "overall", **row} for row in overall]
    )

    notes = [NORMALIZATION_NOTE, CONTEXT_NOTE]
    caveats = []
    if any(im.id.startswith("tix_random_basis") for im in config.imputers):
        caveats.append(RANDOM_BASIS_CAVEAT)
    try:
        ranks = average_ranks(records, metric=config.rank_metric)
    except ValueError as err:
        ranks = {}
        notes.append(f"ranks unavailable: {err}")

    meta = {
        "seed": config.seed,
        "version": __version__,
        "config_digest": config_digest(config),
        "rank_metric": config.rank_metric,
        "notes": notes,
        "caveats": caveats,
    }
    return BenchReport(
        records=tuple(records), aggregates=tuple(aggregates), ranks=ranks, meta=meta
    )


def _fmt_float(x) -> str:
    return "" if x is None else repr(float(x))


def report(records, aggregates, ranks, output_dir, meta: dict | None = None) -> dict[str, Path]:
    """Write results.json, results.csv and report.md; returns the paths.

    results.json carries a content digest computed with the wall-clock
    timestamp removed, so identically-seeded runs are comparable byte for
    byte after dropping ``meta.generated_at``.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = dict(meta or {})
    payload = {
        "meta": meta,
        "records": [r.as_dict() for r in records],
        "aggregates": [dict(a) for a in aggregates],
        "ranks": {k: float(v) for k, v in sorted(ranks.items())},
    }
    stable = json.dumps(
        {**payload, "meta": {k: v for k, v in meta.items() if k != "generated_at"}},
        sort_keys=True,
        allow_nan=False,
    )
    meta["content_digest"] = hashlib.sha256(stable.encode()).hexdigest()
    meta.setdefault("generated_at", datetime.now(timezone.utc).isoformat())

    json_path = out / "results.json"
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")

    csv_path = out / "results.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "imputer_id", "scenario_label", "n_points", "mae", "wql"])
        for r in records:
            writer.writerow(
                [r.dataset, r.imputer_id, r.scenario_label, r.n_points, _fmt_float(r.mae), _fmt_float(r.wql)]
            )

    md_path = out / "report.md"
    with open(md_path, "w") as fh:
        fh.write(_render_markdown(aggregates, ranks, meta))
    return {"json": json_path, "csv": csv_path, "markdown": md_path}


def _render_markdown(aggregates, ranks, meta) -> str:
    cells = [a for a in aggregates if a.get("level", "dataset_scenario") == "dataset_scenario"]
    imputers = sorted({a["imputer_id"] for a in cells})
    table: dict[tuple[str, str], dict[str, float]] = {}
    for a in cells:
        table.setdefault((a["dataset"], a["scenario_label"]), {})[a["imputer_id"]] = a["mae"]

    lines = ["# Imputation benchmark report", ""]
    for note in meta.get("notes", []):
        lines.append(f"- {note}")
    for caveat in meta.get("caveats", []):
        lines.append(f"- caveat: {caveat}")
    lines.append("")
    lines.append("## Normalized MAE by dataset and scenario")
    lines.append("")
    lines.append("| dataset | scenario | " + " | ".join(imputers) + " |")
    lines.append("|---|---|" + "---|" * len(imputers))
    for (dataset, scenario) in sorted(table):
        row = table[(dataset, scenario)]
        values = [row.get(name) for name in imputers]
        present = sorted(v for v in values if v is not None)
        best = present[0] if present else None
        second = present[1] if len(present) > 1 else None
        rendered = []
        for v in values:
            if v is None:
                rendered.append("")
            elif v == best:
                rendered.append(f"**{v:.4f}**")
            elif v == second:
                rendered.append(f"<u>{v:.4f}</u>")
            else:
                rendered.append(f"{v:.4f}")
        lines.append(f"| {dataset} | {scenario} | " + " | ".join(rendered) + " |")
    lines.append("")
    if ranks:
        lines.append(f"## Average ranks ({meta.get('rank_metric', 'mae')}, lower is better)")
        lines.append("")
        lines.append("| imputer | average rank |")
        lines.append("|---|---|")
        for name, rank in sorted(ranks.items(), key=lambda kv: kv[1]):
            lines.append(f"| {name} | {rank:.3f} |")
        lines.append("")
    return "\n".join(lines)


def run_and_report(config: RunConfig, jobs: int = 1, output_dir=None) -> tuple[BenchReport, dict[str, Path]]:
    """Convenience wrapper: execute a run and write its report files."""
    bench = run(config, jobs=jobs)
    paths = report(
        bench.records,
        bench.aggregates,
        bench.ranks,
        output_dir or config.output_dir,
        meta=bench.meta,
    )
    return bench, paths
