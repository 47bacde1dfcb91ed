"""In-memory dimension instances with explicit missing cells.

Cells are strings; ``None`` is the missing marker.  Numeric attributes are
kept as text and parsed when a distance needs them.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Optional, Union

from .schema import DimensionSchema

Cell = Optional[str]
Source = Union[str, Path, IO[str]]


class TableError(ValueError):
    pass


@dataclass
class InstanceTable:
    columns: list[str]
    rows: list[list[Cell]]
    id_column: str

    def __post_init__(self) -> None:
        self._pos = {c: i for i, c in enumerate(self.columns)}
        if self.id_column not in self._pos:
            raise TableError(f"id column {self.id_column!r} not among columns")
        width = len(self.columns)
        for r, row in enumerate(self.rows):
            if len(row) != width:
                raise TableError(f"row {r} has {len(row)} cells, expected {width}")

    @classmethod
    def from_records(cls, schema: DimensionSchema, records: Iterable[dict]) -> InstanceTable:
        """Build a table from dicts; absent keys and ``None`` become missing."""
        cols = schema.names
        rows = [[None if rec.get(c) is None else str(rec[c]) for c in cols] for rec in records]
        t = cls(cols, rows, schema.id_attribute)
        t.check_ids()
        return t

    @property
    def row_id(self) -> int:
        return self._pos[self.id_column]

    def index(self, column: str) -> int:
        try:
            return self._pos[column]
        except KeyError:
            raise KeyError(f"unknown column {column!r}") from None

    def __len__(self) -> int:
        return len(self.rows)

    def get(self, row: int, column: str) -> Cell:
        return self.rows[row][self._pos[column]]

    def set(self, row: int, column: str, value: str) -> None:
        """Fill a missing cell.  Overwriting a present value is refused."""
        j = self._pos[column]
        if self.rows[row][j] is not None:
            raise TableError(f"refusing to overwrite {column!r} in row {row}")
        self.rows[row][j] = value

    def column(self, column: str) -> list[Cell]:
        j = self._pos[column]
        return [row[j] for row in self.rows]

    def ids(self) -> list[str]:
        j = self.row_id
        return [row[j] for row in self.rows]

    def missing_count(self) -> int:
        return sum(c is None for row in self.rows for c in row)

    def missing_cells(self) -> set[tuple[int, str]]:
        return {(r, c) for r, row in enumerate(self.rows) for c, v in zip(self.columns, row) if v is None}

    def check_ids(self) -> None:
        seen: dict[str, int] = {}
        j = self.row_id
        for r, row in enumerate(self.rows):
            v = row[j]
            if v is None:
                raise TableError(f"row {r} has a missing id")
            if v in seen:
                raise TableError(f"duplicate id {v!r} on rows {seen[v]} and {r}")
            seen[v] = r

    def snapshot(self) -> InstanceTable:
        return InstanceTable(list(self.columns), [list(row) for row in self.rows], self.id_column)

    def equals(self, other: InstanceTable) -> bool:
        return self.columns == other.columns and self.rows == other.rows


def _open_text(source: Source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def load_csv(source: Source, schema: DimensionSchema, missing_token: str = "",
             delimiter: str = ",") -> InstanceTable:
    """Read a CSV whose header names (at least) every schema attribute.

    Extra columns are dropped and the rest reordered to schema order.
    """
    fh, close = _open_text(source)
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise TableError("CSV has no header row") from None
        pos = {name: i for i, name in enumerate(header)}
        absent = [n for n in schema.names if n not in pos]
        if absent:
            raise TableError(f"CSV is missing required columns {absent}")
        take = [pos[n] for n in schema.names]
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header):
                raise TableError(f"line {lineno}: {len(raw)} fields, header has {len(header)}")
            rows.append([None if raw[i] == missing_token else raw[i] for i in take])
    finally:
        if close:
            fh.close()
    table = InstanceTable(schema.names, rows, schema.id_attribute)
    table.check_ids()
    return table


def write_csv(table: InstanceTable, sink: Source, missing_token: str = "", delimiter: str = ",") -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            write_csv(table, fh, missing_token, delimiter)
        return
    writer = csv.writer(sink, delimiter=delimiter, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([missing_token if v is None else v for v in row])


def to_csv_text(table: InstanceTable, missing_token: str = "", delimiter: str = ",") -> str:
    buf = io.StringIO()
    write_csv(table, buf, missing_token, delimiter)
    return buf.getvalue()
