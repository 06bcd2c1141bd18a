"""Relational schema model and ingestion.

A :class:`Schema` can be loaded from a SQLite database file (read-only) or
from a JSON schema document. Declared column types are normalized through a
fixed, case-insensitive mapping so type-compatibility checks are reproducible
regardless of the vendor spelling in the source.

Type mapping (first matching rule wins, matching is on the upper-cased raw
string):

====================================  ==========
raw type contains                      mapped to
====================================  ==========
TIMESTAMP or DATETIME                  timestamp
DATE                                   date
TIME                                   timestamp
BOOL                                   boolean
INT                                    integer
CHAR, CLOB, TEXT or STRING             text
BLOB (or empty string)                 blob
REAL, FLOA, DOUB, NUM or DEC           real
anything else                          other
====================================  ==========
"""

from __future__ import annotations

import json
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .canonical import canonical_json

DECLARED_TYPES = (
    "integer",
    "real",
    "text",
    "blob",
    "boolean",
    "date",
    "timestamp",
    "other",
)

_TYPE_RULES = (
    (("TIMESTAMP", "DATETIME"), "timestamp"),
    (("DATE",), "date"),
    (("TIME",), "timestamp"),
    (("BOOL",), "boolean"),
    (("INT",), "integer"),
    (("CHAR", "CLOB", "TEXT", "STRING"), "text"),
    (("BLOB",), "blob"),
    (("REAL", "FLOA", "DOUB", "NUM", "DEC"), "real"),
)


class SchemaError(ValueError):
    """Raised for unreadable, malformed, or inconsistent schema inputs."""


def map_declared_type(raw: str) -> str:
    """Map a raw database type string onto the closed declared-type set."""
    upper = (raw or "").strip().upper()
    if upper == "":
        return "blob"
    for needles, mapped in _TYPE_RULES:
        if any(n in upper for n in needles):
            return mapped
    return "other"


@dataclass(frozen=True)
class ColumnDef:
    name: str
    declared_type: str
    is_primary_key: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("column name must be non-empty")
        if self.declared_type not in DECLARED_TYPES:
            raise SchemaError(f"unknown declared type {self.declared_type!r}")


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[ColumnDef, ...]
    row_count: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("table name must be non-empty")
        if not self.columns:
            raise SchemaError(f"table {self.name!r} has no columns")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column name in table {self.name!r}")
        if self.row_count is not None and self.row_count < 0:
            raise SchemaError("row_count must be non-negative")

    def column(self, name: str) -> ColumnDef:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)


@dataclass(frozen=True)
class ForeignKey:
    from_table: str
    from_column: str
    to_table: str
    to_column: str


@dataclass(frozen=True)
class Schema:
    """Immutable schema: tables in sorted order plus declared foreign keys."""

    tables: tuple[TableDef, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        names = [t.name for t in self.tables]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate table names")
        index = {t.name: t for t in self.tables}
        for fk in self.foreign_keys:
            for tbl, col in ((fk.from_table, fk.from_column), (fk.to_table, fk.to_column)):
                if tbl not in index:
                    raise SchemaError(f"dangling foreign key: table {tbl!r} not in schema")
                if not index[tbl].has_column(col):
                    raise SchemaError(f"dangling foreign key: column {tbl}.{col} not in schema")
        object.__setattr__(self, "_index", index)

    @property
    def table_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tables)

    def table(self, name: str) -> TableDef:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"no table named {name!r}") from None

    def has_table(self, name: str) -> bool:
        return name in self._index

    def fk_between(self, a: str, b: str) -> tuple[ForeignKey, ...]:
        """Foreign keys linking tables ``a`` and ``b`` in either direction."""
        return tuple(
            fk
            for fk in self.foreign_keys
            if {fk.from_table, fk.to_table} == {a, b}
        )

    def has_fk(self, a: str, b: str) -> bool:
        return bool(self.fk_between(a, b))


def _sorted_schema(tables: Iterable[TableDef], fks: Iterable[ForeignKey]) -> Schema:
    tables = tuple(
        TableDef(t.name, tuple(sorted(t.columns, key=lambda c: c.name)), t.row_count)
        for t in sorted(tables, key=lambda t: t.name)
    )
    fks = tuple(
        sorted(fks, key=lambda f: (f.from_table, f.from_column, f.to_table, f.to_column))
    )
    return Schema(tables, fks)


def load_schema_from_database(path: Union[str, Path]) -> Schema:
    """Load every user table, its typed columns, and declared FKs from a SQLite file.

    Tables and columns come back in sorted name order so repeated loads are
    identical. Raises :class:`SchemaError` for unreadable files or databases
    without user tables.
    """
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"database file not readable: {path}")
    try:
        conn = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
    except sqlite3.Error as exc:
        raise SchemaError(f"cannot open database {path}: {exc}") from exc
    try:
        cur = conn.cursor()
        cur.execute(
            "SELECT name FROM sqlite_master WHERE type='table' "
            "AND name NOT LIKE 'sqlite_%' ORDER BY name"
        )
        names = [row[0] for row in cur.fetchall()]
        if not names:
            raise SchemaError(f"no user tables in {path}")
        if len({n.lower() for n in names}) != len(names):
            raise SchemaError("duplicate table names")
        tables = []
        fks = []
        for name in names:
            cur.execute(f'PRAGMA table_info("{name}")')
            cols = [
                ColumnDef(row[1], map_declared_type(row[2]), bool(row[5]))
                for row in cur.fetchall()
            ]
            cur.execute(f'SELECT COUNT(*) FROM "{name}"')
            row_count = cur.fetchone()[0]
            tables.append(TableDef(name, tuple(cols), row_count))
            cur.execute(f'PRAGMA foreign_key_list("{name}")')
            for row in cur.fetchall():
                # (id, seq, ref_table, from_col, to_col, ...); to_col may be
                # NULL, meaning the referenced table's primary key.
                ref_table, from_col, to_col = row[2], row[3], row[4]
                if to_col is None:
                    to_col = _primary_key_of(cur, ref_table)
                fks.append(ForeignKey(name, from_col, ref_table, to_col))
    except sqlite3.Error as exc:
        raise SchemaError(f"error reading database {path}: {exc}") from exc
    finally:
        conn.close()
    return _sorted_schema(tables, fks)


def _primary_key_of(cur: sqlite3.Cursor, table: str) -> str:
    cur.execute(f'PRAGMA table_info("{table}")')
    for row in cur.fetchall():
        if row[5]:
            return row[1]
    raise SchemaError(f"foreign key references table {table!r} without a primary key")


def load_schema_from_document(text: Union[str, bytes]) -> Schema:
    """Parse a JSON schema document (see :func:`serialize_schema_document`)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed schema document: {exc}") from exc
    if not isinstance(doc, dict) or "tables" not in doc:
        raise SchemaError("malformed schema document: missing 'tables' key")
    tables = []
    for t in doc["tables"]:
        try:
            cols = tuple(
                ColumnDef(c["name"], map_declared_type(c["type"]), bool(c.get("pk", False)))
                for c in t["columns"]
            )
            tables.append(TableDef(t["name"], cols, t.get("row_count")))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed table entry: {exc}") from exc
    fks = []
    for f in doc.get("foreign_keys", []):
        try:
            fks.append(
                ForeignKey(f["from_table"], f["from_column"], f["to_table"], f["to_column"])
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed foreign key entry: {exc}") from exc
    return _sorted_schema(tables, fks)


def serialize_schema_document(schema: Schema) -> str:
    """Render the canonical schema document: sorted tables/columns, 2-space indent."""
    doc = {
        "tables": [
            {
                "name": t.name,
                "columns": [
                    {"name": c.name, "type": c.declared_type, "pk": c.is_primary_key}
                    for c in sorted(t.columns, key=lambda c: c.name)
                ],
            }
            for t in sorted(schema.tables, key=lambda t: t.name)
        ],
        "foreign_keys": [
            {
                "from_table": f.from_table,
                "from_column": f.from_column,
                "to_table": f.to_table,
                "to_column": f.to_column,
            }
            for f in sorted(
                schema.foreign_keys,
                key=lambda f: (f.from_table, f.from_column, f.to_table, f.to_column),
            )
        ],
    }
    return canonical_json(doc)
