"""KNN imputation of continuous missing parameter groups, then weak attributes.

For one row and one hierarchy, a continuous missing parameter group (CG) is
a maximal run of adjacent missing parameters.  Groups are completed in
ascending size so that smaller gaps are closed before larger ones are
attempted.  For each group span:

* the missing rows are those missing the whole span while the parameters
  directly below (``low``) and above (``high``) it are present;
* candidates are rows with the whole span present and, when ``high``
  exists, the same ``high`` value as the missing row;
* the k nearest candidates vote with Dudani weights on the span tuple;
* without ``low`` the winning tuple is written directly; with ``low`` the
  votes are pooled per ``low`` value and every row sharing it receives the
  pooled winner, so a lower value never rolls up to two higher ones.

All distances and candidate lists of one pass read a snapshot taken at the
start of the pass; writes go to the live table.
"""
from __future__ import annotations

import math
import os
import time
from collections import defaultdict
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .distance import (AttributeDistanceProvider, DistanceModel, DistanceSnapshot, Embeddings,
                       NoDistanceError, build_distance_model)
from .hier_impute import hierarchical_imputation
from .report import ImputationReport
from .schema import DimensionSchema, HierarchyDef
from .table import InstanceTable

Tuple = tuple[str, ...]
ValueWeightMap = dict[Tuple, float]


@dataclass(frozen=True)
class CGDescriptor:
    hierarchy: str
    start: int  # 0-based index into the parameters; never 0 (the id)
    size: int
    low: str | None
    high: str | None
    span: tuple[str, ...]


def cg_descriptors(hierarchy: HierarchyDef) -> list[CGDescriptor]:
    """Every (size, start) group of a hierarchy, smallest groups first."""
    params = hierarchy.parameters
    v = len(params)
    out = []
    for n in range(1, v):
        for start in range(1, v - n + 1):
            low = params[start - 1] if start >= 2 else None
            high = params[start + n] if start + n < v else None
            out.append(CGDescriptor(hierarchy.name, start, n, low, high, params[start:start + n]))
    return out


class LowMap:
    """Votes pooled per ``low`` value.  Sums use fsum so commit order cannot matter."""

    def __init__(self):
        self._votes: dict[str, dict[Tuple, list[float]]] = defaultdict(lambda: defaultdict(list))

    def add(self, low_value: str, values: Tuple, weight: float) -> None:
        self._votes[low_value][values].append(weight)

    def keys(self) -> list[str]:
        return sorted(self._votes)

    def totals(self, low_value: str) -> ValueWeightMap:
        return {t: math.fsum(ws) for t, ws in self._votes[low_value].items()}

    def __len__(self) -> int:
        return len(self._votes)

    def __contains__(self, low_value: str) -> bool:
        return low_value in self._votes


def best_tuple(vmap: ValueWeightMap) -> Tuple:
    """Highest weight; ties go to the lexicographically smallest tuple."""
    return min(vmap.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def find_missing_instances(table: InstanceTable, cg: CGDescriptor) -> list[int]:
    span = [table.index(p) for p in cg.span]
    li = table.index(cg.low) if cg.low else None
    hi = table.index(cg.high) if cg.high else None
    out = []
    for r, row in enumerate(table.rows):
        if any(row[j] is not None for j in span):
            continue
        if li is not None and row[li] is None:
            continue
        if hi is not None and row[hi] is None:
            continue
        out.append(r)
    return out


def get_candidate_list(table: InstanceTable, cg: CGDescriptor | None, row: int,
                       mode: str = "parameter", weak: str | None = None) -> list[int]:
    if mode == "weak":
        wi = table.index(weak)
        return [r for r, vals in enumerate(table.rows) if vals[wi] is not None and r != row]
    span = [table.index(p) for p in cg.span]
    complete = [r for r, vals in enumerate(table.rows) if all(vals[j] is not None for j in span)]
    if cg.high is None:
        return complete
    hi = table.index(cg.high)
    key = table.rows[row][hi]
    return [r for r in complete if table.rows[r][hi] == key]


def dudani_weights(dist: np.ndarray) -> np.ndarray:
    """Weights falling linearly from 1 at the nearest to 0 at the farthest kept neighbour."""
    d1, dk = dist.min(), dist.max()
    if dk == d1:
        return np.ones_like(dist)
    return (dk - dist) / (dk - d1)


def get_value_weight_map(model: DistanceModel, snap: DistanceSnapshot, row: int, candidates: Sequence[int],
                         k: int, columns: Sequence[str], target: str) -> ValueWeightMap:
    """Dudani-weighted votes of the ``k`` nearest candidates on the ``columns`` tuple."""
    if len(candidates) == 0:
        raise ValueError("no candidates to vote")
    cands = np.asarray(candidates, dtype=np.intp)
    dist = model.distances(snap, row, cands, target)
    order = np.lexsort((cands, dist))[:k]
    weights = dudani_weights(dist[order])
    vmap: ValueWeightMap = {}
    for idx, w in zip(order, weights):
        r = int(cands[idx])
        t = tuple(snap.value(c, r) for c in columns)
        vmap[t] = vmap.get(t, 0.0) + float(w)
    return vmap


def _weak_index(table: InstanceTable, hierarchy: HierarchyDef, span: Sequence[str]) -> dict:
    """For each span parameter's weak attribute: parameter value -> first present weak value."""
    idx = {}
    for p in span:
        pi = table.index(p)
        for w in hierarchy.weak_of(p):
            wi = table.index(w)
            m: dict[str, str] = {}
            for vals in table.rows:
                if vals[pi] is not None and vals[wi] is not None and vals[pi] not in m:
                    m[vals[pi]] = vals[wi]
            idx[(p, w)] = m
    return idx


def _write_span(table: InstanceTable, hierarchy: HierarchyDef, row: int, span: Sequence[str],
                values: Tuple, weak_index: dict) -> int:
    n = 0
    for p, v in zip(span, values):
        if table.get(row, p) is None:
            table.set(row, p, v)
            n += 1
    for p in span:
        pv = table.get(row, p)
        for w in hierarchy.weak_of(p):
            if table.get(row, w) is None:
                found = weak_index[(p, w)].get(pv)
                if found is not None:
                    table.set(row, w, found)
                    n += 1
    return n


def replace_no_plow(table: InstanceTable, schema: DimensionSchema, low_map: LowMap, vmap: ValueWeightMap,
                    row: int, cg: CGDescriptor, weak_index: dict | None = None) -> LowMap:
    """Write the winning tuple (no ``low``) or pool it into ``low_map`` (with ``low``)."""
    best = best_tuple(vmap)
    if cg.low is None:
        h = schema.hierarchy(cg.hierarchy)
        if weak_index is None:
            weak_index = _weak_index(table, h, cg.span)
        _write_span(table, h, row, cg.span, best, weak_index)
    else:
        low_map.add(table.get(row, cg.low), best, vmap[best])
    return low_map


def replace_plow(table: InstanceTable, schema: DimensionSchema, low_map: LowMap, cg: CGDescriptor,
                 weak_index: dict | None = None) -> int:
    """Give every row sharing a pooled ``low`` value that value's winning tuple."""
    h = schema.hierarchy(cg.hierarchy)
    if weak_index is None:
        weak_index = _weak_index(table, h, cg.span)
    li = table.index(cg.low)
    span = [table.index(p) for p in cg.span]
    by_low = defaultdict(list)
    for r, vals in enumerate(table.rows):
        if vals[li] in low_map and all(vals[j] is None for j in span):
            by_low[vals[li]].append(r)
    n = 0
    for lv in low_map.keys():
        best = best_tuple(low_map.totals(lv))
        for r in by_low[lv]:
            n += _write_span(table, h, r, cg.span, best, weak_index)
    return n


def _map(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _vote_or_none(model, snap, row, cands, k, columns, target):
    if not cands:
        return None
    try:
        return get_value_weight_map(model, snap, row, cands, k, columns, target)
    except NoDistanceError:
        return None


def impute_parameters(table: InstanceTable, schema: DimensionSchema, hierarchy: str, k: int,
                      model: DistanceModel, threads: int = 1, events: list | None = None) -> int:
    """Fill missing parameter groups of one hierarchy, smallest groups first."""
    h = schema.hierarchy(hierarchy)
    filled = 0
    for cg in cg_descriptors(h):
        if events is not None:
            events.append(("parameters", cg.hierarchy, cg.size, cg.start))
        missing = find_missing_instances(table, cg)
        if not missing:
            continue
        snap = model.snapshot(table.snapshot())
        span = [table.index(p) for p in cg.span]
        complete = [r for r, vals in enumerate(snap.table.rows) if all(vals[j] is not None for j in span)]
        if not complete:
            continue
        if cg.high is not None:
            hi = table.index(cg.high)
            groups = defaultdict(list)
            for r in complete:
                groups[snap.table.rows[r][hi]].append(r)
            cands_of = lambda r: groups.get(snap.table.rows[r][hi], [])
        else:
            cands_of = lambda r: complete

        votes = _map(lambda r: _vote_or_none(model, snap, r, cands_of(r), k, cg.span, cg.hierarchy),
                     missing, threads)
        weak_index = _weak_index(table, h, cg.span)
        low_map = LowMap()
        before = table.missing_count()
        for r, vmap in zip(missing, votes):
            if vmap:
                replace_no_plow(table, schema, low_map, vmap, r, cg, weak_index)
        if cg.low is not None and len(low_map):
            replace_plow(table, schema, low_map, cg, weak_index)
        filled += before - table.missing_count()
    return filled


def impute_weak(table: InstanceTable, schema: DimensionSchema, hierarchy: str, k: int,
                model: DistanceModel, threads: int = 1, events: list | None = None) -> int:
    """Fill remaining weak attributes: copy from a same-parameter row, else KNN vote."""
    h = schema.hierarchy(hierarchy)
    target = hierarchy
    filled = 0
    for p in h.parameters:
        for w in h.weak_of(p):
            if events is not None:
                events.append(("weak", h.name, p, w))
            pi, wi = table.index(p), table.index(w)
            missing = [r for r, vals in enumerate(table.rows) if vals[wi] is None]
            if not missing:
                continue
            # parameter value -> weak value, kept current as fills land
            witness: dict[str, str] = {}
            for vals in table.rows:
                if vals[pi] is not None and vals[wi] is not None and vals[pi] not in witness:
                    witness[vals[pi]] = vals[wi]
            snap = model.snapshot(table.snapshot())
            cands = [r for r, vals in enumerate(snap.table.rows) if vals[wi] is not None]
            need_vote = [r for r in missing if table.rows[r][pi] not in witness or p == schema.id_attribute]
            votes = dict(zip(need_vote, _map(
                lambda r: _vote_or_none(model, snap, r, cands, k, (w,), target), need_vote, threads)))
            for r in missing:
                pv = table.rows[r][pi]
                if p != schema.id_attribute and pv is not None and pv in witness:
                    value = witness[pv]
                else:
                    vmap = votes.get(r)
                    if vmap is None:
                        vmap = _vote_or_none(model, snap, r, cands, k, (w,), target)
                    if not vmap:
                        continue
                    value = best_tuple(vmap)[0]
                table.set(r, w, value)
                filled += 1
                if pv is not None and p != schema.id_attribute:
                    witness.setdefault(pv, value)
    return filled


@dataclass
class ImputeConfig:
    k: int = 5
    level_weight: str = "incremental"
    hierarchy_weight: str = "dependency"
    threads: int = 1
    sample_threshold: int = 10_000
    sample_size: int = 1_000
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.threads < 1:
            self.threads = os.cpu_count() or 1


def h_olapknn(table: InstanceTable, schema: DimensionSchema, config: ImputeConfig | None = None,
              provider: AttributeDistanceProvider | None = None,
              embeddings: Embeddings | None = None) -> ImputationReport:
    """Hierarchical imputation followed by KNN imputation, modifying ``table`` in place."""
    config = config or ImputeConfig()
    method = "h_olapknn_mi" if config.hierarchy_weight == "mutual_info" else "h_olapknn"
    report = ImputationReport(method=method, config=asdict(config))
    t0 = time.perf_counter()
    report.fills["hierarchical"] = hierarchical_imputation(table, schema)
    report.timings["hierarchical"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    model = build_distance_model(schema, table, provider, embeddings, config.level_weight,
                                 config.hierarchy_weight, config.sample_threshold, config.sample_size,
                                 config.seed)
    report.timings["model"] = time.perf_counter() - t1
    for h in schema.hierarchies:
        t2 = time.perf_counter()
        report.fills[f"parameters:{h.name}"] = impute_parameters(
            table, schema, h.name, config.k, model, config.threads, report.events)
        t3 = time.perf_counter()
        report.fills[f"weak:{h.name}"] = impute_weak(
            table, schema, h.name, config.k, model, config.threads, report.events)
        report.timings[f"parameters:{h.name}"] = t3 - t2
        report.timings[f"weak:{h.name}"] = time.perf_counter() - t3
    report.runtime_s = time.perf_counter() - t0
    report.remaining_missing = table.missing_count()
    return report
