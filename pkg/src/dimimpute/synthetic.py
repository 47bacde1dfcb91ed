"""Seeded generator of dimensions with strict hierarchies.

Each hierarchy is a random tree: every value of level l is assigned to one
parent at level l + 1, so the generated table is strict by construction.
A row picks a top value, then walks down choosing a child per level.  With
``dominant`` set, one child of each parent takes that share of its parent's
rows and the others split the rest; otherwise children are uniform.

Values are random letter tokens, so string distance carries no hint about
the hierarchy.  Every non-id level gets a weak ``<param>_label`` attribute
when ``weak_labels`` is on.  Hierarchies other than the first can follow the
first one's top value with probability ``link``, which makes them
informative about each other.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .schema import AttributeDef, DimensionSchema, HierarchyDef
from .table import InstanceTable


@dataclass
class HierarchySpec:
    name: str
    cardinalities: tuple[int, ...]  # distinct values per level, from level 2 upward
    dominant: float | None = None
    link: float = 0.0


@dataclass
class SyntheticConfig:
    n_rows: int = 1000
    hierarchies: tuple[HierarchySpec, ...] = (
        HierarchySpec("H1", (16, 4), dominant=0.9),
        HierarchySpec("H2", (16, 4), dominant=0.9, link=0.9),
    )
    weak_labels: bool = True
    id_weaks: dict[str, int] = field(default_factory=lambda: {"Colour": 6})
    token_length: int = 6


def _tokens(rng: np.random.Generator, count: int, length: int, taken: set[str]) -> list[str]:
    letters = np.array(list(string.ascii_lowercase))
    out = []
    while len(out) < count:
        t = "".join(rng.choice(letters, size=length))
        if t not in taken:
            taken.add(t)
            out.append(t)
    return out


def separation_config(n_rows: int = 1000) -> SyntheticConfig:
    """Benchmark where each parent has a 90% dominant child but no value covers >40% globally."""
    return SyntheticConfig(n_rows=n_rows)


def generate(config: SyntheticConfig, seed: int) -> tuple[DimensionSchema, InstanceTable]:
    rng = np.random.default_rng(seed)
    taken: set[str] = set()
    attrs = [AttributeDef("Id", "text")]
    hierarchies = []
    trees = []
    for spec in config.hierarchies:
        cards = spec.cardinalities
        if any(a < b for a, b in zip(cards, cards[1:])):
            raise ValueError(f"{spec.name}: cardinalities must not grow toward the top")
        names = [f"{spec.name}_L{l}" for l in range(2, len(cards) + 2)]
        values = [_tokens(rng, c, config.token_length, taken) for c in cards]
        # children[l][parent index] -> child indices at level l (0 = level 2)
        children = []
        for l in range(len(cards) - 1):
            kids: list[list[int]] = [[] for _ in range(cards[l + 1])]
            perm = rng.permutation(cards[l])
            for i, c in enumerate(perm):
                kids[i % cards[l + 1]].append(int(c))
            children.append(kids)
        weak = {}
        for n in names:
            attrs.append(AttributeDef(n, "text"))
            if config.weak_labels:
                attrs.append(AttributeDef(f"{n}_label", "text"))
                weak[n] = (f"{n}_label",)
        hierarchies.append(HierarchyDef(spec.name, ("Id", *names), weak))
        labels = [_tokens(rng, c, config.token_length + 2, taken) for c in cards]
        trees.append((spec, names, values, labels, children))

    id_weak_vals = {}
    for w, card in config.id_weaks.items():
        attrs.append(AttributeDef(w, "text"))
        id_weak_vals[w] = _tokens(rng, card, config.token_length, taken)
    if id_weak_vals:
        hierarchies[0] = HierarchyDef(hierarchies[0].name, hierarchies[0].parameters,
                                      {"Id": tuple(id_weak_vals), **hierarchies[0].weak})
    schema = DimensionSchema("Id", tuple(attrs), tuple(hierarchies))

    width = len(str(config.n_rows))
    records = []
    for r in range(config.n_rows):
        rec = {"Id": f"P{r:0{width}d}"}
        first_top = None
        for spec, names, values, labels, children in trees:
            top_card = spec.cardinalities[-1]
            if first_top is not None and rng.random() < spec.link:
                idx = first_top % top_card
            else:
                idx = int(rng.integers(top_card))
            if first_top is None:
                first_top = idx
            path = [idx]
            for l in range(len(children) - 1, -1, -1):
                kids = children[l][path[-1]]
                if spec.dominant is not None and len(kids) > 1:
                    if rng.random() < spec.dominant:
                        c = kids[0]
                    else:
                        c = kids[1 + int(rng.integers(len(kids) - 1))]
                else:
                    c = kids[int(rng.integers(len(kids)))]
                path.append(c)
            path.reverse()  # level 2 first
            for lvl, (n, i) in enumerate(zip(names, path)):
                rec[n] = values[lvl][i]
                if config.weak_labels:
                    rec[f"{n}_label"] = labels[lvl][i]
        for w, vals in id_weak_vals.items():
            rec[w] = vals[int(rng.integers(len(vals)))]
        records.append(rec)
    return schema, InstanceTable.from_records(schema, records)


def random_strict_config(rng: np.random.Generator, n_rows: int, n_hierarchies: int = 2,
                         levels: int = 3) -> SyntheticConfig:
    """Random cardinalities for property and oracle tests; ``levels`` counts the id."""
    specs = []
    for h in range(n_hierarchies):
        cards = sorted((int(rng.integers(1, 12)) for _ in range(levels - 1)), reverse=True)
        dominant = None if rng.random() < 0.5 else float(rng.uniform(0.5, 0.95))
        specs.append(HierarchySpec(f"H{h + 1}", tuple(cards), dominant, float(rng.uniform(0, 1))))
    return SyntheticConfig(n_rows=n_rows, hierarchies=tuple(specs),
                           weak_labels=bool(rng.random() < 0.7),
                           id_weaks={"Tag": int(rng.integers(2, 8))} if rng.random() < 0.5 else {})
