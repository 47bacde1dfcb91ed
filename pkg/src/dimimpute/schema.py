"""Dimension schema: attributes, hierarchies, parameters and weak attributes.

A dimension has one identifier attribute and a list of hierarchies.  Each
hierarchy is an ordered list of parameters from the identifier (finest
granularity, level 1) up to the coarsest level; any parameter may carry
weak attributes that it functionally determines.

Schema files are YAML (JSON is accepted too, being a YAML subset)::

    id: Id
    attributes:
      - {name: Id, kind: text}
      - {name: Brand, kind: text}
      - {name: Weight, kind: numeric}
    hierarchies:
      - name: H2
        parameters: [Id, Brand]
        weak: {Id: [Weight]}
"""
from __future__ import annotations

from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import yaml

if TYPE_CHECKING:
    from .table import InstanceTable

KINDS = ("numeric", "text")


class SchemaError(ValueError):
    """Raised when a schema file cannot be parsed or resolved."""


@dataclass(frozen=True)
class AttributeDef:
    name: str
    kind: str = "text"


@dataclass(frozen=True)
class HierarchyDef:
    name: str
    parameters: tuple[str, ...]
    weak: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def weak_of(self, parameter: str) -> tuple[str, ...]:
        return tuple(self.weak.get(parameter, ()))

    def level_attributes(self, level: int) -> tuple[str, ...]:
        """Parameter of ``level`` (1-based) followed by its weak attributes."""
        p = self.parameters[level - 1]
        return (p,) + self.weak_of(p)

    @property
    def depth(self) -> int:
        return len(self.parameters)

    def owner_of(self, weak_attr: str) -> str | None:
        for p, ws in self.weak.items():
            if weak_attr in ws:
                return p
        return None


@dataclass(frozen=True)
class DimensionSchema:
    id_attribute: str
    attributes: tuple[AttributeDef, ...]
    hierarchies: tuple[HierarchyDef, ...]

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def attribute(self, name: str) -> AttributeDef:
        for a in self.attributes:
            if a.name == name:
                return a
        raise KeyError(name)

    def hierarchy(self, name: str) -> HierarchyDef:
        for h in self.hierarchies:
            if h.name == name:
                return h
        raise KeyError(name)

    def id_weaks(self) -> list[str]:
        """Weak attributes of the identifier, across all hierarchies, deduplicated."""
        out: list[str] = []
        for h in self.hierarchies:
            for w in h.weak_of(self.id_attribute):
                if w not in out:
                    out.append(w)
        return out


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


@dataclass(frozen=True)
class StrictnessViolation:
    hierarchy: str
    lower: str
    upper: str
    value: str
    targets: tuple[str, ...]

    def __str__(self) -> str:
        return (f"{self.hierarchy}: {self.lower}={self.value!r} rolls up to "
                f"{len(self.targets)} distinct {self.upper} values {list(self.targets)}")


def _mark(node: yaml.Node | None) -> str:
    if node is None or node.start_mark is None:
        return ""
    m = node.start_mark
    return f" (line {m.line + 1}, column {m.column + 1})"


def _find_node(root: yaml.Node, *path: str | int) -> yaml.Node | None:
    """Walk a composed YAML node tree for error positions; None if the path is absent."""
    node = root
    for key in path:
        if isinstance(node, yaml.MappingNode) and isinstance(key, str):
            found = [v for k, v in node.value if getattr(k, "value", None) == key]
            if not found:
                return None
            node = found[0]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int):
            if key >= len(node.value):
                return None
            node = node.value[key]
        else:
            return None
    return node


def parse_schema(source: str) -> DimensionSchema:
    """Parse schema file content into a resolved :class:`DimensionSchema`.

    Raises :class:`SchemaError` with a line/column when the document is
    malformed, references an unknown attribute, or repeats a hierarchy name.
    """
    try:
        root = yaml.compose(source)
        data = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise SchemaError(f"malformed schema{where}: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(data, dict):
        raise SchemaError("schema must be a mapping with keys id, attributes, hierarchies")
    for key in ("id", "attributes", "hierarchies"):
        if key not in data:
            raise SchemaError(f"schema is missing required key {key!r}")

    attrs = []
    for i, a in enumerate(data["attributes"] or []):
        if not isinstance(a, dict) or "name" not in a:
            raise SchemaError(f"attribute entry {i} needs a name{_mark(_find_node(root, 'attributes', i))}")
        kind = a.get("kind", "text")
        if kind not in KINDS:
            raise SchemaError(f"attribute {a['name']!r} has unknown kind {kind!r}; "
                              f"expected one of {KINDS}{_mark(_find_node(root, 'attributes', i))}")
        attrs.append(AttributeDef(str(a["name"]), kind))
    known = {a.name for a in attrs}

    id_attr = str(data["id"])
    if id_attr not in known:
        raise SchemaError(f"id attribute {id_attr!r} is not declared in attributes{_mark(_find_node(root, 'id'))}")

    hierarchies = []
    seen: set[str] = set()
    for i, h in enumerate(data["hierarchies"] or []):
        if not isinstance(h, dict) or "name" not in h or "parameters" not in h:
            raise SchemaError(f"hierarchy entry {i} needs name and parameters{_mark(_find_node(root, 'hierarchies', i))}")
        name = str(h["name"])
        if name in seen:
            raise SchemaError(f"duplicate hierarchy name {name!r}{_mark(_find_node(root, 'hierarchies', i, 'name'))}")
        seen.add(name)
        params = tuple(str(p) for p in h["parameters"])
        for j, p in enumerate(params):
            if p not in known:
                raise SchemaError(f"hierarchy {name!r} references unknown attribute {p!r}"
                                  f"{_mark(_find_node(root, 'hierarchies', i, 'parameters', j))}")
        weak = {}
        for p, ws in (h.get("weak") or {}).items():
            p = str(p)
            if p not in known:
                raise SchemaError(f"hierarchy {name!r} attaches weak attributes to unknown attribute {p!r}"
                                  f"{_mark(_find_node(root, 'hierarchies', i, 'weak'))}")
            ws = tuple(str(w) for w in (ws or []))
            for w in ws:
                if w not in known:
                    raise SchemaError(f"hierarchy {name!r} references unknown attribute {w!r}"
                                      f"{_mark(_find_node(root, 'hierarchies', i, 'weak', p))}")
            weak[p] = ws
        hierarchies.append(HierarchyDef(name, params, weak))

    return DimensionSchema(id_attr, tuple(attrs), tuple(hierarchies))


def load_schema(path: str | Path) -> DimensionSchema:
    return parse_schema(Path(path).read_text(encoding="utf-8"))


def dump_schema(schema: DimensionSchema) -> str:
    doc = {
        "id": schema.id_attribute,
        "attributes": [{"name": a.name, "kind": a.kind} for a in schema.attributes],
        "hierarchies": [
            {"name": h.name, "parameters": list(h.parameters),
             "weak": {p: list(ws) for p, ws in h.weak.items()}}
            for h in schema.hierarchies
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def validate_schema(schema: DimensionSchema) -> list[Violation]:
    """List every structural invariant the schema violates; empty means valid."""
    out: list[Violation] = []
    counts: dict[str, int] = defaultdict(int)
    for a in schema.attributes:
        counts[a.name] += 1
        if a.kind not in KINDS:
            out.append(Violation("kind", f"attribute {a.name!r} has unknown kind {a.kind!r}"))
    for name, c in counts.items():
        if c > 1:
            out.append(Violation("duplicate-attribute", f"attribute {name!r} declared {c} times"))
    known = set(counts)
    if schema.id_attribute not in known:
        out.append(Violation("id", f"id attribute {schema.id_attribute!r} is not declared"))

    hnames: dict[str, int] = defaultdict(int)
    for h in schema.hierarchies:
        hnames[h.name] += 1
        if not h.parameters or h.parameters[0] != schema.id_attribute:
            out.append(Violation("id-first", f"hierarchy {h.name!r}: id must be first parameter"))
        if len(set(h.parameters)) != len(h.parameters):
            out.append(Violation("repeated-parameter", f"hierarchy {h.name!r} repeats a parameter"))
        for p in h.parameters:
            if p not in known:
                out.append(Violation("unresolved", f"hierarchy {h.name!r} references unknown attribute {p!r}"))
        seen_weak: set[str] = set()
        for p, ws in h.weak.items():
            if p not in h.parameters:
                out.append(Violation("weak-owner", f"hierarchy {h.name!r}: {p!r} carries weak attributes "
                                                   f"but is not one of its parameters"))
            for w in ws:
                if w not in known:
                    out.append(Violation("unresolved", f"hierarchy {h.name!r} references unknown attribute {w!r}"))
                if w in h.parameters:
                    out.append(Violation("weak-is-parameter",
                                         f"hierarchy {h.name!r}: weak attribute {w!r} is also a parameter"))
                if w in seen_weak:
                    out.append(Violation("weak-multiple",
                                         f"hierarchy {h.name!r}: weak attribute {w!r} attached to more than one parameter"))
                seen_weak.add(w)
    for name, c in hnames.items():
        if c > 1:
            out.append(Violation("duplicate-hierarchy", f"hierarchy name {name!r} used {c} times"))
    # id weak attributes share the weight-key namespace with hierarchy names
    for w in schema.id_weaks():
        if w in hnames:
            out.append(Violation("name-clash", f"id weak attribute {w!r} has the same name as a hierarchy"))
    return out


def validate_strictness(schema: DimensionSchema, table: InstanceTable) -> list[StrictnessViolation]:
    """Report lower-level values that roll up to two or more upper-level values.

    Pairs with a missing cell on either side are ignored.
    """
    missing_cols = [n for n in schema.names if n not in table.columns]
    if missing_cols:
        raise ValueError(f"table lacks schema columns {missing_cols}")
    out: list[StrictnessViolation] = []
    for h in schema.hierarchies:
        for lower, upper in zip(h.parameters, h.parameters[1:]):
            li, ui = table.index(lower), table.index(upper)
            targets: dict[str, set[str]] = defaultdict(set)
            order: list[str] = []
            for row in table.rows:
                lv, uv = row[li], row[ui]
                if lv is None or uv is None:
                    continue
                if lv not in targets:
                    order.append(lv)
                targets[lv].add(uv)
            for lv in order:
                if len(targets[lv]) > 1:
                    out.append(StrictnessViolation(h.name, lower, upper, lv, tuple(sorted(targets[lv]))))
    return out
