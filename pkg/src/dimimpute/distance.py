"""Distances between dimension instances.

Four nested levels: attribute distance, level distance (a parameter and its
weak attributes), hierarchy distance (level-weighted sum over levels 2..v)
and dimension distance (hierarchy-weighted sum over hierarchies plus the
identifier's weak attributes, which act as one-parameter hierarchies).

A term whose value cannot be computed (the completing instance is missing
the attribute) is skipped and the weights of the remaining terms are
rescaled to sum to one.

Two evaluation routes exist.  The scalar methods on :class:`DistanceModel`
follow the definitions one pair at a time; :meth:`DistanceModel.distances`
evaluates one instance against many candidates with numpy over an encoded
:class:`DistanceSnapshot`.  Imputation uses the second; tests check that
both agree.
"""
from __future__ import annotations

import math
import warnings
from collections import Counter, defaultdict
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .schema import AttributeDef, DimensionSchema, HierarchyDef
from .table import Cell, InstanceTable

LEVEL_WEIGHT_MODES = ("cardinality", "incremental")
HIERARCHY_WEIGHT_MODES = ("dependency", "mutual_info")


class ZeroWeightError(ValueError):
    """A weight normalisation had a zero denominator."""


class NoDistanceError(ValueError):
    """Every term of a distance was skipped."""


# ---------------------------------------------------------------------------
# attribute-level metrics


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_edit_distance(a: str, b: str) -> float:
    """Levenshtein distance divided by the longer length; 0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def numeric_distance(v1, v2, lo: float, hi: float) -> float:
    x, y = float(v1), float(v2)
    if hi == lo:
        return 0.0
    return min(1.0, abs(x - y) / (hi - lo))


class Embeddings:
    """Word vectors loaded from ``token v1 ... vd`` lines."""

    def __init__(self, vectors: Mapping[str, np.ndarray]):
        self.vectors = dict(vectors)
        dims = {v.shape[0] for v in self.vectors.values()}
        if len(dims) > 1:
            raise ValueError(f"inconsistent embedding dimensions {sorted(dims)}")
        self.dim = dims.pop() if dims else 0

    def __contains__(self, token: str) -> bool:
        return token in self.vectors or token.lower() in self.vectors

    def lookup(self, token: str) -> np.ndarray | None:
        v = self.vectors.get(token)
        if v is None:
            v = self.vectors.get(token.lower())
        return v

    def phrase_vector(self, text: str) -> np.ndarray | None:
        """Mean vector of the whitespace tokens; None if any token is unknown."""
        tokens = text.split()
        if not tokens:
            return None
        vecs = []
        for tok in tokens:
            v = self.lookup(tok)
            if v is None:
                return None
            vecs.append(v)
        return np.mean(vecs, axis=0)


def load_embeddings(path: str | Path) -> Embeddings:
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise ValueError(f"{path}:{lineno}: token {token!r} has no vector")
            elif len(values) != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} components, got {len(values)}")
            try:
                vectors[token] = np.array([float(x) for x in values])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric vector component") from None
    return Embeddings(vectors)


def text_distance(v1: str, v2: str, embeddings: Embeddings | None = None) -> float:
    """Semantic distance (1 - cos) / 2 when both values embed, normalised edit distance otherwise."""
    if v1 == v2:
        return 0.0
    if embeddings is not None:
        a, b = embeddings.phrase_vector(v1), embeddings.phrase_vector(v2)
        if a is not None and b is not None:
            na, nb = np.linalg.norm(a), np.linalg.norm(b)
            if na > 0 and nb > 0:
                cos = float(np.dot(a, b) / (na * nb))
                return min(1.0, max(0.0, (1.0 - cos) / 2.0))
    return normalized_edit_distance(v1, v2)


# ---------------------------------------------------------------------------
# providers


class AttributeDistanceProvider:
    """Distance in [0, 1] between two present values of one attribute."""

    def distance(self, attr: AttributeDef, v1: str, v2: str) -> float:
        raise NotImplementedError


class EditDistanceProvider(AttributeDistanceProvider):
    def distance(self, attr, v1, v2):
        return normalized_edit_distance(v1, v2)


class MixedProvider(AttributeDistanceProvider):
    """Normalised numeric distance for numeric attributes, text distance for the rest."""

    def __init__(self, stats: Mapping[str, tuple[float, float]], embeddings: Embeddings | None = None):
        self.stats = dict(stats)
        self.embeddings = embeddings

    def distance(self, attr, v1, v2):
        if attr.kind == "numeric":
            try:
                lo, hi = self.stats[attr.name]
            except KeyError:
                raise ValueError(f"no min/max statistics for numeric attribute {attr.name!r}") from None
            try:
                return numeric_distance(v1, v2, lo, hi)
            except ValueError:
                raise ValueError(f"attribute {attr.name!r}: cannot parse {v1!r} / {v2!r} as numbers") from None
        return text_distance(v1, v2, self.embeddings)


class TableProvider(AttributeDistanceProvider):
    """Fixed distances per ``(attribute, v1, v2)``; equal values are 0, unlisted pairs ``default``."""

    def __init__(self, entries: Mapping[tuple[str, str, str], float], default: float = 1.0):
        self.entries = {}
        for (a, x, y), d in entries.items():
            self.entries[(a, x, y)] = d
            self.entries[(a, y, x)] = d
        self.default = default

    def distance(self, attr, v1, v2):
        if v1 == v2:
            return 0.0
        return self.entries.get((attr.name, v1, v2), self.default)


def attribute_stats(schema: DimensionSchema, table: InstanceTable) -> dict[str, tuple[float, float]]:
    """Min and max of every numeric attribute over present cells."""
    out = {}
    for a in schema.attributes:
        if a.kind != "numeric":
            continue
        vals = []
        for v in table.column(a.name):
            if v is None:
                continue
            try:
                vals.append(float(v))
            except ValueError:
                raise ValueError(f"attribute {a.name!r}: non-numeric value {v!r}") from None
        if vals:
            out[a.name] = (min(vals), max(vals))
    return out


def attribute_distance(provider: AttributeDistanceProvider, attr: AttributeDef, v1: Cell, v2: Cell,
                       column: Sequence[Cell] = (), own_row: int | None = None) -> float | None:
    """Distance between the cells of two instances on one attribute.

    ``None`` (skip) when ``v1`` is missing.  When only ``v2`` is missing, the
    result is the mean distance from ``v1`` to the present cells of
    ``column``, leaving out position ``own_row``.
    """
    if v1 is None:
        return None
    if v2 is not None:
        return provider.distance(attr, v1, v2)
    others = [c for j, c in enumerate(column) if c is not None and j != own_row]
    if not others:
        return None
    return sum(provider.distance(attr, v1, c) for c in others) / len(others)


def _combine(pairs: list[tuple[float, float]]) -> float | None:
    """Weighted mean of (weight, value) pairs; plain mean if all weights are zero."""
    if not pairs:
        return None
    wsum = sum(w for w, _ in pairs)
    if wsum > 0:
        return sum(w * v for w, v in pairs) / wsum
    return sum(v for _, v in pairs) / len(pairs)


# ---------------------------------------------------------------------------
# weights


def level_weights(hierarchy: HierarchyDef, table: InstanceTable | None, mode: str = "incremental") -> dict[int, float]:
    """Weights of levels 2..v of a hierarchy, keyed by 1-based level.

    ``cardinality`` gives each level its share of distinct present values;
    ``incremental`` gives the top level one portion and each level below one
    more, i.e. ``2 (v - l + 1) / (v^2 - v)``.
    """
    v = hierarchy.depth
    if v < 2:
        raise ValueError(f"hierarchy {hierarchy.name!r} has no level above the id")
    levels = range(2, v + 1)
    if mode == "incremental":
        return {l: 2 * (v - l + 1) / (v * v - v) for l in levels}
    if mode != "cardinality":
        raise ValueError(f"unknown level-weight mode {mode!r}")
    if table is None:
        raise ValueError("cardinality weights need a table")
    dv = {}
    for l in levels:
        col = table.column(hierarchy.parameters[l - 1])
        dv[l] = len({c for c in col if c is not None})
    total = sum(dv.values())
    if total == 0:
        raise ZeroWeightError(f"hierarchy {hierarchy.name!r}: every level above the id is empty")
    return {l: dv[l] / total for l in levels}


def dependency_degree(table: InstanceTable, source: str, target: str) -> float:
    """Rough-set dependency degree of ``target`` on ``source``.

    A row belongs to the positive region when both its cells are present and
    every row with the same source value and a present target carries the
    same target value.  The positive-region size is divided by the number of
    rows in the table.
    """
    if source == target:
        return 1.0
    n = len(table)
    if n == 0:
        return 0.0
    si, ti = table.index(source), table.index(target)
    targets: dict[str, set[str]] = defaultdict(set)
    sizes: Counter[str] = Counter()
    for row in table.rows:
        s, t = row[si], row[ti]
        if s is None or t is None:
            continue
        targets[s].add(t)
        sizes[s] += 1
    pos = sum(sizes[s] for s, ts in targets.items() if len(ts) == 1)
    return pos / n


def mutual_information_weight(table: InstanceTable, source: str, target: str) -> float:
    """Mutual information in nats between two columns over rows where both are present."""
    si, ti = table.index(source), table.index(target)
    pairs = [(row[si], row[ti]) for row in table.rows if row[si] is not None and row[ti] is not None]
    n = len(pairs)
    if n == 0:
        return 0.0
    joint = Counter(pairs)
    ps = Counter(s for s, _ in pairs)
    pt = Counter(t for _, t in pairs)
    mi = 0.0
    for (s, t), c in sorted(joint.items()):
        mi += c / n * math.log(c * n / (ps[s] * pt[t]))
    return max(mi, 0.0)


def distance_terms(schema: DimensionSchema) -> list[tuple[str, str]]:
    """Terms of the dimension distance: ``("hierarchy", name)`` or ``("weak", attr)``."""
    terms = [("hierarchy", h.name) for h in schema.hierarchies if h.depth >= 2]
    terms += [("weak", w) for w in schema.id_weaks()]
    return terms


def hierarchy_weights(table: InstanceTable, schema: DimensionSchema, target: str,
                      mode: str = "dependency") -> dict[str, float]:
    """Weight of every hierarchy and id weak attribute relative to ``target``.

    Each source scores how well its second-level parameter (or the weak
    attribute itself) determines the target's second-level parameter; the
    scores are normalised to sum to one.
    """
    h1 = schema.hierarchy(target)
    if h1.depth < 2:
        raise ValueError(f"hierarchy {target!r} has no level above the id")
    p_target = h1.parameters[1]
    scores = {}
    for kind, key in distance_terms(schema):
        src = schema.hierarchy(key).parameters[1] if kind == "hierarchy" else key
        if mode == "dependency":
            scores[key] = 1.0 if key == target else dependency_degree(table, src, p_target)
        elif mode == "mutual_info":
            scores[key] = mutual_information_weight(table, src, p_target)
        else:
            raise ValueError(f"unknown hierarchy-weight mode {mode!r}")
    total = sum(scores.values())
    if total <= 0:
        raise ZeroWeightError(f"all dependency scores toward {target!r} are zero; use uniform weights")
    return {k: s / total for k, s in scores.items()}


def uniform_weights(keys: Sequence[str]) -> dict[str, float]:
    return {k: 1.0 / len(keys) for k in keys}


# ---------------------------------------------------------------------------
# model


@dataclass
class DistanceModel:
    schema: DimensionSchema
    provider: AttributeDistanceProvider
    level_weights: dict[str, dict[int, float]]
    hierarchy_weights: dict[str, dict[str, float]]
    attr_stats: dict[str, tuple[float, float]] = field(default_factory=dict)
    level_weight_mode: str = "incremental"
    hierarchy_weight_mode: str = "dependency"
    sample_threshold: int = 10_000
    sample_size: int = 1_000
    seed: int = 0

    def __post_init__(self):
        self._attrs = {a.name: a for a in self.schema.attributes}
        self._attr_pos = {a.name: i for i, a in enumerate(self.schema.attributes)}
        self._terms = distance_terms(self.schema)
        self._pair_cache: dict[tuple[str, str, str], float] = {}

    # -- shared helpers

    def pair_distance(self, name: str, v1: str, v2: str) -> float:
        key = (name, v1, v2) if v1 <= v2 else (name, v2, v1)
        d = self._pair_cache.get(key)
        if d is None:
            d = float(self.provider.distance(self._attrs[name], v1, v2))
            if not 0.0 <= d <= 1.0:
                raise ValueError(f"provider returned {d} for {name!r}; distances must lie in [0, 1]")
            self._pair_cache[key] = d
        return d

    def reference_rows(self, name: str, column: Sequence[Cell]) -> list[int]:
        """Rows scanned when averaging over a column; a seeded sample on large columns."""
        present = [j for j, c in enumerate(column) if c is not None]
        if len(present) <= self.sample_threshold:
            return present
        rng = np.random.default_rng([self.seed, self._attr_pos[name]])
        return sorted(rng.choice(present, size=self.sample_size, replace=False).tolist())

    def weights_for(self, target: str) -> dict[str, float]:
        w = self.hierarchy_weights.get(target)
        if w is None:
            w = uniform_weights([k for _, k in self._terms])
        return w

    # -- scalar route

    def attribute_distance(self, table: InstanceTable, name: str, r1: int, r2: int) -> float | None:
        col = table.column(name)
        v1, v2 = col[r1], col[r2]
        if v1 is None:
            return None
        if v2 is not None:
            return self.pair_distance(name, v1, v2)
        refs = [j for j in self.reference_rows(name, col) if j != r1]
        if not refs:
            return None
        return sum(self.pair_distance(name, v1, col[j]) for j in refs) / len(refs)

    def level_distance(self, table: InstanceTable, r1: int, r2: int, hierarchy: str, level: int) -> float | None:
        if level < 2:
            raise ValueError("levels start at 2; the id level carries no distance")
        h = self.schema.hierarchy(hierarchy)
        ds = [self.attribute_distance(table, a, r1, r2) for a in h.level_attributes(level)]
        ds = [d for d in ds if d is not None]
        if not ds:
            return None
        return sum(ds) / len(ds)

    def hierarchy_distance(self, table: InstanceTable, r1: int, r2: int, hierarchy: str) -> float | None:
        if hierarchy not in self.level_weights:
            if hierarchy in self._attrs:
                return self.attribute_distance(table, hierarchy, r1, r2)
            raise KeyError(hierarchy)
        pairs = []
        for level, w in self.level_weights[hierarchy].items():
            d = self.level_distance(table, r1, r2, hierarchy, level)
            if d is not None:
                pairs.append((w, d))
        return _combine(pairs)

    def dimension_distance(self, table: InstanceTable, r1: int, r2: int, target: str) -> float:
        weights = self.weights_for(target)
        pairs = []
        for kind, key in self._terms:
            if kind == "hierarchy":
                d = self.hierarchy_distance(table, r1, r2, key)
            else:
                d = self.attribute_distance(table, key, r1, r2)
            if d is not None:
                pairs.append((weights[key], d))
        out = _combine(pairs)
        if out is None:
            raise NoDistanceError(f"row {r1} has no attribute to compare on")
        return out

    # -- vector route

    def snapshot(self, table: InstanceTable) -> DistanceSnapshot:
        return DistanceSnapshot(self, table)

    def distances(self, snap: DistanceSnapshot, r1: int, candidates: Sequence[int], target: str) -> np.ndarray:
        """Dimension distance from row ``r1`` to every candidate row of the snapshot."""
        cands = np.asarray(candidates, dtype=np.intp)
        weights = self.weights_for(target)
        parts = []
        for kind, key in self._terms:
            if kind == "hierarchy":
                vec = self._hierarchy_vector(snap, r1, cands, key)
            else:
                vec = snap.attr_vector(key, r1, cands)
            if vec is not None:
                parts.append((weights[key], vec))
        out = _combine_vectors(parts, len(cands))
        if out is None:
            raise NoDistanceError(f"row {r1} has no attribute to compare on")
        return out

    def _hierarchy_vector(self, snap, r1, cands, hierarchy):
        h = self.schema.hierarchy(hierarchy)
        parts = []
        for level, w in self.level_weights[hierarchy].items():
            vecs = [snap.attr_vector(a, r1, cands) for a in h.level_attributes(level)]
            vecs = [v for v in vecs if v is not None]
            if vecs:
                parts.append((w, sum(vecs[1:], vecs[0]) / len(vecs)))
        return _combine_vectors(parts, len(cands))


def _combine_vectors(parts, n):
    if not parts:
        return None
    wsum = sum(w for w, _ in parts)
    acc = np.zeros(n)
    if wsum > 0:
        for w, v in parts:
            acc += w * v
        return acc / wsum
    for _, v in parts:
        acc += v
    return acc / len(parts)


class DistanceSnapshot:
    """Integer-coded copy of a table state for batched distance evaluation."""

    def __init__(self, model: DistanceModel, table: InstanceTable):
        self.model = model
        self.table = table
        self.codes: dict[str, np.ndarray] = {}
        self.vocab: dict[str, list[str]] = {}
        for name in model.schema.names:
            j = table.index(name)
            lookup: dict[str, int] = {}
            vocab: list[str] = []
            codes = np.empty(len(table), dtype=np.int64)
            for r, row in enumerate(table.rows):
                v = row[j]
                if v is None:
                    codes[r] = -1
                    continue
                c = lookup.get(v)
                if c is None:
                    c = lookup[v] = len(vocab)
                    vocab.append(v)
                codes[r] = c
            self.codes[name] = codes
            self.vocab[name] = vocab
        self._refs: dict[str, tuple[np.ndarray, np.ndarray, set[int]]] = {}
        self._means: dict[tuple[str, str, bool], float | None] = {}

    def value(self, name: str, row: int) -> str | None:
        c = self.codes[name][row]
        return None if c < 0 else self.vocab[name][c]

    def _reference_counts(self, name):
        ref = self._refs.get(name)
        if ref is None:
            rows = self.model.reference_rows(name, self.table.column(name))
            uniq, counts = np.unique(self.codes[name][rows], return_counts=True)
            ref = self._refs[name] = (uniq, counts, set(rows))
        return ref

    def mean_distance(self, name: str, r1: int) -> float | None:
        v = self.value(name, r1)
        uniq, counts, rows = self._reference_counts(name)
        own = r1 in rows
        key = (name, v, own)
        if key in self._means:
            return self._means[key]
        n = int(counts.sum()) - own
        if n <= 0:
            out = None
        else:
            vocab, pd = self.vocab[name], self.model.pair_distance
            # the own row contributes d(v, v) = 0 to the sum
            out = sum(int(c) * pd(name, v, vocab[u]) for u, c in zip(uniq, counts)) / n
        self._means[key] = out
        return out

    def attr_vector(self, name: str, r1: int, cands: np.ndarray) -> np.ndarray | None:
        v = self.value(name, r1)
        if v is None:
            return None
        codes = self.codes[name][cands]
        uniq, inverse = np.unique(codes, return_inverse=True)
        vocab, pd = self.vocab[name], self.model.pair_distance
        table = np.empty(len(uniq))
        for i, u in enumerate(uniq):
            if u < 0:
                m = self.mean_distance(name, r1)
                if m is None:
                    # r1 holds the only present cell, so every candidate skips this attribute
                    return None
                table[i] = m
            else:
                table[i] = pd(name, v, vocab[u])
        return table[inverse.reshape(-1)]


def build_distance_model(schema: DimensionSchema, table: InstanceTable,
                         provider: AttributeDistanceProvider | None = None,
                         embeddings: Embeddings | None = None,
                         level_weight: str = "incremental",
                         hierarchy_weight: str = "dependency",
                         sample_threshold: int = 10_000, sample_size: int = 1_000,
                         seed: int = 0) -> DistanceModel:
    """Precompute level weights, hierarchy weights and numeric ranges from ``table``."""
    if level_weight not in LEVEL_WEIGHT_MODES:
        raise ValueError(f"unknown level-weight mode {level_weight!r}")
    if hierarchy_weight not in HIERARCHY_WEIGHT_MODES:
        raise ValueError(f"unknown hierarchy-weight mode {hierarchy_weight!r}")
    stats = attribute_stats(schema, table)
    if provider is None:
        provider = MixedProvider(stats, embeddings)
    lw = {}
    for h in schema.hierarchies:
        if h.depth < 2:
            continue
        try:
            lw[h.name] = level_weights(h, table, level_weight)
        except ZeroWeightError as exc:
            warnings.warn(f"{exc}; using incremental level weights", RuntimeWarning, stacklevel=2)
            lw[h.name] = level_weights(h, table, "incremental")
    hw = {}
    keys = [k for _, k in distance_terms(schema)]
    for h in schema.hierarchies:
        if h.depth < 2:
            continue
        try:
            hw[h.name] = hierarchy_weights(table, schema, h.name, hierarchy_weight)
        except ZeroWeightError as exc:
            warnings.warn(f"{exc}; falling back to uniform weights", RuntimeWarning, stacklevel=2)
            hw[h.name] = uniform_weights(keys)
    return DistanceModel(schema, provider, lw, hw, stats, level_weight, hierarchy_weight,
                         sample_threshold, sample_size, seed)
