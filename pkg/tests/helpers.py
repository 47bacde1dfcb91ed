"""Shared test helpers: random strict tables and an arbitrary bounded provider."""
import zlib

import numpy as np

from dimimpute.distance import AttributeDistanceProvider
from dimimpute.evaluation import inject_missing
from dimimpute.synthetic import generate, random_strict_config


class HashProvider(AttributeDistanceProvider):
    """Symmetric pseudo-random distances in [0, 1] with d(v, v) = 0."""

    def __init__(self, salt: int = 0):
        self.salt = salt

    def distance(self, attr, v1, v2):
        if v1 == v2:
            return 0.0
        a, b = sorted((v1, v2))
        return (zlib.crc32(f"{self.salt}|{attr.name}|{a}|{b}".encode()) % 10_001) / 10_000


def random_masked(seed: int, n_rows: int = 60, rate: float = 0.25, levels: int = 3, n_hierarchies: int = 2):
    rng = np.random.default_rng(seed)
    schema, table = generate(random_strict_config(rng, n_rows, n_hierarchies, levels), seed)
    attrs = [a for a in schema.names if a != schema.id_attribute]
    masked, mask = inject_missing(table, {a: rate for a in attrs}, seed + 1)
    return schema, table, masked, mask


def brute_fd_closure(schema, table):
    """Cells fillable by repeated witness copying, found by scanning all row pairs.

    Returns {(row, attribute): value}; the table is not modified.
    """
    rows = [list(r) for r in table.rows]
    pos = {c: i for i, c in enumerate(table.columns)}
    rules = []  # (target attribute, witness attributes)
    for h in schema.hierarchies:
        ps = h.parameters
        for l in range(2, len(ps)):
            rules.append((ps[l], ps[1:l]))
        for p in ps[1:]:
            for w in h.weak_of(p):
                rules.append((w, (p,)))
    filled = {}
    changed = True
    while changed:
        changed = False
        for r, row in enumerate(rows):
            for target, witnesses in rules:
                ti = pos[target]
                if row[ti] is not None:
                    continue
                for wa in witnesses:
                    wi = pos[wa]
                    if row[wi] is None:
                        continue
                    donors = [o[ti] for k, o in enumerate(rows)
                              if k != r and o[wi] == row[wi] and o[ti] is not None]
                    if donors:
                        row[ti] = donors[0]
                        filled[(r, target)] = donors[0]
                        changed = True
                        break
    return filled
