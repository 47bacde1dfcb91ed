"""Exact imputation from the functional dependencies inside each hierarchy.

In a strict hierarchy a parameter value determines every higher parameter
and every weak attribute of itself.  A missing cell is therefore copied
from any other row that agrees with it on a lower (non-id) parameter and
has the cell present.  Passes repeat until nothing changes, since one fill
can supply the witness for another.
"""
from __future__ import annotations

from .schema import DimensionSchema
from .table import InstanceTable


def _first_values(rows, key_idx: int, val_idx: int) -> dict[str, str]:
    """Map each key value to the value in the first row (table order) where both are present."""
    out: dict[str, str] = {}
    for row in rows:
        k, v = row[key_idx], row[val_idx]
        if k is not None and v is not None and k not in out:
            out[k] = v
    return out


def _propose(table: InstanceTable, schema: DimensionSchema) -> list[tuple[int, int, str]]:
    """One read-only pass: every (row, column, value) fill with a witness."""
    rows = table.rows
    fills: list[tuple[int, int, str]] = []
    for h in schema.hierarchies:
        params = h.parameters
        # parameters at 1-based level >= 3, witnessed by a level in [2, l)
        for l in range(3, len(params) + 1):
            ti = table.index(params[l - 1])
            lowers = [table.index(params[j - 1]) for j in range(l - 1, 1, -1)]  # closest first
            maps = {li: _first_values(rows, li, ti) for li in lowers}
            for r, row in enumerate(rows):
                if row[ti] is not None:
                    continue
                for li in lowers:
                    k = row[li]
                    if k is not None and k in maps[li]:
                        fills.append((r, ti, maps[li][k]))
                        break
        for p in params[1:]:
            pi = table.index(p)
            for w in h.weak_of(p):
                wi = table.index(w)
                wmap = _first_values(rows, pi, wi)
                for r, row in enumerate(rows):
                    if row[wi] is None and row[pi] is not None and row[pi] in wmap:
                        fills.append((r, wi, wmap[row[pi]]))
    return fills


def hierarchical_imputation(table: InstanceTable, schema: DimensionSchema) -> int:
    """Fill every cell that a same-valued lower parameter witnesses; returns the fill count."""
    total = 0
    while True:
        applied = 0
        for r, j, v in _propose(table, schema):
            if table.rows[r][j] is None:
                table.rows[r][j] = v
                applied += 1
        if not applied:
            return total
        total += applied
