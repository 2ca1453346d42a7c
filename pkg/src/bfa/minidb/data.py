"""Database loading and deterministic dataset generation.

Storage format is one CSV file per table with a `name:type,...` header.
Values never contain commas, quotes, or newlines (the generator's token
list guarantees that for bundled data), so parsing is a plain split.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..errors import BfaError

logger = logging.getLogger(__name__)

COLUMN_TYPES = ("int", "text")

_MASK64 = (1 << 64) - 1
_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407


class LoadError(BfaError):
    """Malformed CSV table or dataset spec."""


@dataclass
class Table:
    name: str
    schema: List[Tuple[str, str]]
    rows: List[tuple]


@dataclass
class Database:
    tables: Dict[str, Table] = field(default_factory=dict)

    @property
    def stats(self) -> Dict[str, int]:
        return {name: len(t.rows) for name, t in self.tables.items()}


def _parse_header(header: str, file_label: str) -> List[Tuple[str, str]]:
    schema: List[Tuple[str, str]] = []
    for part in header.split(","):
        name, sep, type_name = part.partition(":")
        if not sep or not name or type_name not in COLUMN_TYPES:
            raise LoadError(
                "%s: bad header field %r (want name:int or name:text)"
                % (file_label, part)
            )
        schema.append((name, type_name))
    return schema


def load_database(dir_path) -> Database:
    """Load every *.csv under dir_path. An empty directory is a valid,
    empty database."""
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise LoadError("database directory %s does not exist" % dir_path)
    db = Database()
    for path in sorted(dir_path.glob("*.csv")):
        name = path.stem
        if name in db.tables:
            raise LoadError("duplicate table name %r" % name)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines:
            raise LoadError("%s: empty file, header line required" % path.name)
        schema = _parse_header(lines[0], path.name)
        rows: List[tuple] = []
        for row_no, line in enumerate(lines[1:], start=1):
            fields = line.split(",")
            if len(fields) != len(schema):
                raise LoadError(
                    "%s row %d: expected %d values, got %d"
                    % (path.name, row_no, len(schema), len(fields))
                )
            values = []
            for raw, (col, type_name) in zip(fields, schema):
                if type_name == "int":
                    try:
                        values.append(int(raw))
                    except ValueError:
                        raise LoadError(
                            "%s row %d: %r is not an int (column %s)"
                            % (path.name, row_no, raw, col)
                        ) from None
                else:
                    values.append(raw)
            rows.append(tuple(values))
        db.tables[name] = Table(name=name, schema=schema, rows=rows)
        logger.debug("loaded table %s: %d rows", name, len(rows))
    return db


# ── Deterministic generation ─────────────────────────────────────────────────


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    type: str
    range: Optional[int] = None  # required for int columns: values in [0, range)

    def __post_init__(self):
        if self.type not in COLUMN_TYPES:
            raise LoadError("column %s: unknown type %r" % (self.name, self.type))
        if self.type == "int" and (self.range is None or self.range < 1):
            raise LoadError("int column %s needs a positive range" % self.name)


@dataclass(frozen=True)
class TableSpec:
    name: str
    row_count: int
    columns: Tuple[ColumnSpec, ...]

    def __post_init__(self):
        if self.row_count < 0:
            raise LoadError("table %s: negative row_count" % self.name)


@dataclass(frozen=True)
class DatasetSpec:
    seed: int
    tokens: Tuple[str, ...]
    tables: Tuple[TableSpec, ...]

    def __post_init__(self):
        if not self.tokens:
            raise LoadError("dataset spec needs a non-empty token list")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DatasetSpec":
        tables = tuple(
            TableSpec(
                name=t["name"],
                row_count=t["row_count"],
                columns=tuple(
                    ColumnSpec(c["name"], c["type"], c.get("range"))
                    for c in t["columns"]
                ),
            )
            for t in doc["tables"]
        )
        return cls(seed=doc["seed"], tokens=tuple(doc["tokens"]), tables=tables)


def lcg_next(state: int) -> int:
    return (state * _LCG_MULT + _LCG_INC) & _MASK64


def generate_dataset(spec: DatasetSpec, out_dir) -> List[Path]:
    """Write one CSV per table spec, byte-exactly reproducible from the seed.

    One generator state is threaded through the whole dataset in table, row,
    column order; each value consumes exactly one draw (the new state's top
    31 bits).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    state = spec.seed & _MASK64
    written: List[Path] = []
    for table in spec.tables:
        lines = [",".join("%s:%s" % (c.name, c.type) for c in table.columns)]
        for _ in range(table.row_count):
            values = []
            for col in table.columns:
                state = lcg_next(state)
                draw = state >> 33
                if col.type == "int":
                    values.append(str(draw % col.range))
                else:
                    values.append(spec.tokens[draw % len(spec.tokens)])
            lines.append(",".join(values))
        path = out_dir / ("%s.csv" % table.name)
        path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
        written.append(path)
        logger.debug("generated %s: %d rows", path.name, table.row_count)
    return written
