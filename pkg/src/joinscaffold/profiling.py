"""Join-statistics profiling: selectivity and correlation strength per pair.

Profiling samples up to ``sample_limit`` rows per table (rowid order, so runs
are repeatable) and derives two [0, 1] statistics per candidate join pair:

* selectivity — Jaccard overlap of the sampled distinct value sets of the two
  join columns;
* correlation strength — absolute Pearson correlation of quantile-aligned
  numeric samples when both columns are numeric, otherwise Cramér's V over
  index-paired sampled categories.

Any statistic that cannot be computed (empty table, constant column, missing
data) falls back to the neutral value 0.5 so unprofiled pairs neither attract
nor repel the planner.
"""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .schema import Schema, SchemaError

NEUTRAL = 0.5
DEFAULT_SAMPLE_LIMIT = 10_000

# (table_a, column_a, table_b, column_b) with table_a < table_b
JoinPair = tuple[str, str, str, str]


def _pair_key(ta: str, ca: str, tb: str, cb: str) -> JoinPair:
    if (ta, ca) <= (tb, cb):
        return (ta, ca, tb, cb)
    return (tb, cb, ta, ca)


@dataclass(frozen=True)
class PairStats:
    selectivity: float
    correlation: float

    def __post_init__(self) -> None:
        for v in (self.selectivity, self.correlation):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"pair statistic {v} outside [0,1]")


@dataclass(frozen=True)
class StatsProfile:
    """Immutable profile of distinct counts, samples, and per-pair statistics."""

    sample_limit: int
    distinct_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    samples: dict[tuple[str, str], tuple] = field(default_factory=dict)
    pairs: dict[JoinPair, PairStats] = field(default_factory=dict)

    def pair_stats(self, ta: str, ca: str, tb: str, cb: str) -> Optional[PairStats]:
        return self.pairs.get(_pair_key(ta, ca, tb, cb))

    def table_pair_stats(self, ta: str, tb: str) -> Optional[PairStats]:
        """Best-selectivity stats over any profiled column pair of two tables."""
        found = [
            stats
            for (a, _ca, b, _cb), stats in sorted(self.pairs.items())
            if {a, b} == {ta, tb}
        ]
        if not found:
            return None
        return max(found, key=lambda s: s.selectivity)


def _sample_table(
    cur: sqlite3.Cursor, table: str, columns: Sequence[str], limit: int
) -> dict[str, list]:
    cols = ", ".join(f'"{c}"' for c in columns)
    try:
        cur.execute(f'SELECT {cols} FROM "{table}" ORDER BY rowid LIMIT ?', (limit,))
    except sqlite3.OperationalError:
        # WITHOUT ROWID tables have no rowid; fall back to declaration order.
        cur.execute(f'SELECT {cols} FROM "{table}" LIMIT ?', (limit,))
    rows = cur.fetchall()
    out: dict[str, list] = {c: [] for c in columns}
    for row in rows:
        for c, v in zip(columns, row):
            if v is not None:
                out[c].append(v)
    return out


def jaccard(a: Sequence, b: Sequence) -> Optional[float]:
    sa, sb = set(a), set(b)
    if not sa or not sb:
        return None
    union = sa | sb
    return len(sa & sb) / len(union)


def _as_numeric(values: Sequence) -> Optional[np.ndarray]:
    try:
        arr = np.asarray([float(v) for v in values], dtype=np.float64)
    except (TypeError, ValueError):
        return None
    if not np.all(np.isfinite(arr)):
        return None
    return arr


def quantile_aligned_pearson(a: Sequence, b: Sequence) -> Optional[float]:
    """|Pearson r| of the two samples' order statistics, aligned by quantile."""
    xa = _as_numeric(a)
    xb = _as_numeric(b)
    if xa is None or xb is None or len(xa) < 2 or len(xb) < 2:
        return None
    xa = np.sort(xa)
    xb = np.sort(xb)
    n = min(len(xa), len(xb))
    idx_a = np.round(np.linspace(0, len(xa) - 1, n)).astype(int)
    idx_b = np.round(np.linspace(0, len(xb) - 1, n)).astype(int)
    ya, yb = xa[idx_a], xb[idx_b]
    if np.std(ya) == 0.0 or np.std(yb) == 0.0:
        return None
    r = float(np.corrcoef(ya, yb)[0, 1])
    if not np.isfinite(r):
        return None
    return min(1.0, abs(r))


def cramers_v(a: Sequence, b: Sequence) -> Optional[float]:
    """Cramér's V over index-paired samples, truncated to the shorter column."""
    n = min(len(a), len(b))
    if n < 2:
        return None
    xa = [str(v) for v in a[:n]]
    xb = [str(v) for v in b[:n]]
    cats_a = sorted(set(xa))
    cats_b = sorted(set(xb))
    if len(cats_a) < 2 or len(cats_b) < 2:
        return None
    table = np.zeros((len(cats_a), len(cats_b)), dtype=np.float64)
    ia = {c: i for i, c in enumerate(cats_a)}
    ib = {c: i for i, c in enumerate(cats_b)}
    for va, vb in zip(xa, xb):
        table[ia[va], ib[vb]] += 1
    row = table.sum(axis=1, keepdims=True)
    col = table.sum(axis=0, keepdims=True)
    expected = row @ col / n
    with np.errstate(divide="ignore", invalid="ignore"):
        chi2 = np.nansum(np.where(expected > 0, (table - expected) ** 2 / expected, 0.0))
    denom = n * (min(len(cats_a), len(cats_b)) - 1)
    if denom <= 0:
        return None
    return min(1.0, float(np.sqrt(chi2 / denom)))


def _pair_statistics(
    samples_a: Sequence, samples_b: Sequence, both_numeric: bool
) -> PairStats:
    sel = jaccard(samples_a, samples_b)
    if both_numeric:
        corr = quantile_aligned_pearson(samples_a, samples_b)
    else:
        corr = cramers_v(samples_a, samples_b)
    return PairStats(
        selectivity=NEUTRAL if sel is None else min(1.0, max(0.0, sel)),
        correlation=NEUTRAL if corr is None else min(1.0, max(0.0, corr)),
    )


def profile_statistics(
    schema: Schema,
    path: Union[str, Path],
    sample_limit: int = DEFAULT_SAMPLE_LIMIT,
    pairs: Optional[Sequence[JoinPair]] = None,
) -> StatsProfile:
    """Profile the database at ``path`` for the given candidate join pairs.

    When ``pairs`` is omitted the candidates are derived from the schema with
    the same edge-admission rule the graph builder uses (FK pairs plus
    similarity-admitted pairs).
    """
    if sample_limit <= 0:
        raise ValueError("sample_limit must be positive")
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"database file not readable: {path}")
    if pairs is None:
        from .costs import candidate_join_pairs  # deferred: costs imports this module

        pairs = candidate_join_pairs(schema)

    conn = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
    try:
        cur = conn.cursor()
        cur.execute(
            "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%'"
        )
        present = {row[0] for row in cur.fetchall()}
        missing = [t.name for t in schema.tables if t.name not in present]
        if missing:
            raise SchemaError(f"schema/database mismatch: missing tables {missing}")

        needed: dict[str, set[str]] = {}
        for ta, ca, tb, cb in pairs:
            needed.setdefault(ta, set()).add(ca)
            needed.setdefault(tb, set()).add(cb)

        samples: dict[tuple[str, str], tuple] = {}
        distinct: dict[tuple[str, str], int] = {}
        for table in sorted(needed):
            cols = sorted(needed[table])
            data = _sample_table(cur, table, cols, sample_limit)
            for col in cols:
                values = tuple(data[col])
                samples[(table, col)] = values
                distinct[(table, col)] = len(set(values))
    finally:
        conn.close()

    pair_stats: dict[JoinPair, PairStats] = {}
    for ta, ca, tb, cb in pairs:
        key = _pair_key(ta, ca, tb, cb)
        type_a = schema.table(ta).column(ca).declared_type
        type_b = schema.table(tb).column(cb).declared_type
        both_numeric = {type_a, type_b} <= {"integer", "real"}
        pair_stats[key] = _pair_statistics(
            samples[(ta, ca)], samples[(tb, cb)], both_numeric
        )

    return StatsProfile(
        sample_limit=sample_limit,
        distinct_counts=distinct,
        samples=samples,
        pairs=pair_stats,
    )
