"""Missingness injection, accuracy scoring, baseline imputers and the benchmark grid."""
from __future__ import annotations

import csv
import json
import math
import statistics
import time
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, replace
from typing import IO

import numpy as np

from .distance import AttributeDistanceProvider, DistanceModel, MixedProvider, attribute_stats
from .olapknn import ImputeConfig, dudani_weights, h_olapknn
from .schema import DimensionSchema
from .table import InstanceTable

METHODS = ("h_olapknn", "h_olapknn_mi", "knn", "mode")

GroundTruthMask = dict[tuple[str, str], str]


def inject_missing(table: InstanceTable, rates: Mapping[str, float], seed: int,
                   schema: DimensionSchema | None = None) -> tuple[InstanceTable, GroundTruthMask]:
    """Blank the first ``ceil(rate * n)`` cells of each attribute under a seeded row permutation.

    Returns a new table plus the originals keyed by ``(row id, attribute)``.
    Attributes are processed in table column order, each with its own
    permutation, so masks can overlap within a row.
    """
    id_col = table.id_column
    if id_col in rates and rates[id_col] > 0:
        raise ValueError("the id attribute cannot be masked")
    for a, rate in rates.items():
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"rate for {a!r} must lie in [0, 1], got {rate}")
        table.index(a)
    out = table.snapshot()
    ids = table.ids()
    n = len(table)
    mask: GroundTruthMask = {}
    rng = np.random.default_rng(seed)
    for a in table.columns:
        rate = rates.get(a, 0.0)
        if a == id_col or rate == 0:
            continue
        j = table.index(a)
        count = min(n, math.ceil(rate * n - 1e-9))
        order = rng.permutation(n)
        for r in order[:count]:
            v = out.rows[r][j]
            if v is not None:
                mask[(ids[r], a)] = v
                out.rows[r][j] = None
    return out, mask


def accuracy(table: InstanceTable, mask: GroundTruthMask) -> float:
    """Share of masked cells restored to their original value (whitespace-trimmed match)."""
    if not mask:
        raise ValueError("accuracy is undefined for an empty mask")
    return attribute_accuracy(table, mask)[None]


def attribute_accuracy(table: InstanceTable, mask: GroundTruthMask) -> dict[str | None, float]:
    """Accuracy per attribute, plus the overall figure under key ``None``."""
    rows = {rid: r for r, rid in enumerate(table.ids())}
    hits: Counter = Counter()
    totals: Counter = Counter()
    for (rid, a), truth in mask.items():
        v = table.get(rows[rid], a)
        totals[a] += 1
        if v is not None and v.strip() == truth.strip():
            hits[a] += 1
    out: dict[str | None, float] = {a: hits[a] / totals[a] for a in totals}
    out[None] = sum(hits.values()) / sum(totals.values()) if totals else float("nan")
    return out


def mode_impute(table: InstanceTable, schema: DimensionSchema) -> int:
    """Fill each missing non-id cell with its column's most frequent value."""
    filled = 0
    for a in schema.names:
        if a == schema.id_attribute:
            continue
        j = table.index(a)
        counts = Counter(row[j] for row in table.rows if row[j] is not None)
        if not counts:
            continue
        top = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        for row in table.rows:
            if row[j] is None:
                row[j] = top
                filled += 1
    return filled


def basic_knn_impute(table: InstanceTable, schema: DimensionSchema, k: int = 5,
                     provider: AttributeDistanceProvider | None = None) -> int:
    """Structure-blind KNN: mean attribute distance, Dudani vote among rows holding the value."""
    if k < 1:
        raise ValueError("k must be at least 1")
    stats = attribute_stats(schema, table)
    model = DistanceModel(schema, provider or MixedProvider(stats), {}, {}, stats)
    snap = model.snapshot(table.snapshot())
    attrs = [a for a in schema.names if a != schema.id_attribute]
    filled = 0
    for a in attrs:
        j = table.index(a)
        present = np.array([r for r, row in enumerate(snap.table.rows) if row[j] is not None], dtype=np.intp)
        if present.size == 0:
            continue
        others = [b for b in attrs if b != a]
        for r, row in enumerate(snap.table.rows):
            if row[j] is not None:
                continue
            vecs = [v for v in (snap.attr_vector(b, r, present) for b in others) if v is not None]
            if not vecs:
                continue
            dist = sum(vecs[1:], vecs[0]) / len(vecs)
            order = np.lexsort((present, dist))[:k]
            weights = dudani_weights(dist[order])
            votes: dict[str, float] = {}
            for idx, w in zip(order, weights):
                v = snap.value(a, int(present[idx]))
                votes[v] = votes.get(v, 0.0) + float(w)
            table.rows[r][j] = min(votes.items(), key=lambda kv: (-kv[1], kv[0]))[0]
            filled += 1
    return filled


def run_method(method: str, table: InstanceTable, schema: DimensionSchema,
               config: ImputeConfig | None = None,
               provider: AttributeDistanceProvider | None = None) -> int:
    config = config or ImputeConfig()
    if method == "h_olapknn":
        return h_olapknn(table, schema, replace(config, hierarchy_weight="dependency"), provider).total_fills
    if method == "h_olapknn_mi":
        return h_olapknn(table, schema, replace(config, hierarchy_weight="mutual_info"), provider).total_fills
    if method == "knn":
        return basic_knn_impute(table, schema, config.k, provider)
    if method == "mode":
        return mode_impute(table, schema)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


@dataclass
class BenchRecord:
    method: str
    rate: float
    repeats: int
    mean_accuracy: float | None
    stdev_accuracy: float | None
    mean_runtime_s: float | None
    note: str = ""


def repeat_seed(seed: int, rate_index: int, repeat: int) -> int:
    return int(np.random.SeedSequence([seed, rate_index, repeat]).generate_state(1)[0])


def run_benchmark(dataset: InstanceTable, schema: DimensionSchema, rates: Sequence[float],
                  methods: Sequence[str] = METHODS, repeats: int = 20, seed: int = 0,
                  config: ImputeConfig | None = None,
                  provider: AttributeDistanceProvider | None = None) -> list[BenchRecord]:
    """Mean accuracy and runtime per (rate, method) over seeded injections.

    Every method sees the same masked tables for a given rate and repeat.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    config = config or ImputeConfig(seed=seed)
    attrs = [a for a in schema.names if a != schema.id_attribute]
    records = []
    for ri, rate in enumerate(rates):
        accs: dict[str, list[float]] = {m: [] for m in methods}
        times: dict[str, list[float]] = {m: [] for m in methods}
        for rep in range(repeats):
            masked, mask = inject_missing(dataset, {a: rate for a in attrs}, repeat_seed(seed, ri, rep))
            if not mask:
                continue
            for m in methods:
                t = masked.snapshot()
                t0 = time.perf_counter()
                run_method(m, t, schema, config, provider)
                times[m].append(time.perf_counter() - t0)
                accs[m].append(accuracy(t, mask))
        for m in methods:
            if not accs[m]:
                records.append(BenchRecord(m, rate, 0, None, None, None, "empty mask: accuracy undefined"))
                continue
            sd = statistics.pstdev(accs[m]) if len(accs[m]) > 1 else 0.0
            records.append(BenchRecord(m, rate, len(accs[m]), statistics.fmean(accs[m]), sd,
                                       statistics.fmean(times[m])))
    return records


def format_report(records: Sequence[BenchRecord], timings: bool = True) -> str:
    """One JSON object per line; runtime omitted when ``timings`` is false."""
    lines = []
    for rec in records:
        d = asdict(rec)
        if not timings:
            d.pop("mean_runtime_s")
        lines.append(json.dumps(d, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def write_report_csv(records: Sequence[BenchRecord], sink: IO[str], timings: bool = True) -> None:
    fields = [f for f in BenchRecord.__dataclass_fields__ if timings or f != "mean_runtime_s"]
    w = csv.DictWriter(sink, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for rec in records:
        w.writerow(asdict(rec))
