"""Three-level validation of candidate SQL.

Level 1 executes the query read-only and captures engine errors. Level 2
checks semantic consistency: terminal coverage, join relevance against the
scaffold, and attribute mapping. Level 3 audits mathematical structure: the
group-by rule, aggregate/operation agreement, and constraint translation.

A level-1 failure suppresses levels 2 and 3. When the query parses outside
the supported subset, levels 2 and 3 are skipped with an explanatory note and
validation falls back to execution only.
"""

from __future__ import annotations

import datetime as _dt
import re
import sqlite3
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from ..canonical import canonical_json
from ..costs import CostWeights, DEFAULT_WEIGHTS
from ..decompose import MathEntity, TerminalSet, phrase_matches_name
from ..embedding import EmbeddingProvider, default_provider
from ..schema import Schema
from ..steiner import SteinerScaffold
from .parser import (
    BetweenOp,
    BinaryOp,
    ColumnRef,
    FuncCall,
    IsNull,
    Literal,
    ParseError,
    Query,
    Star,
    UnaryOp,
    aggregates_in,
    columns_in,
    parse_sql,
    walk,
)

CODES = (
    "MISSING_TERMINAL",
    "IRRELEVANT_JOIN",
    "UNMAPPED_ATTRIBUTE",
    "GROUPBY_RULE",
    "AGG_MISMATCH",
    "CONSTRAINT_MISMATCH",
    "SYNTAX",
    "EXECUTION",
)


class InfrastructureError(RuntimeError):
    """Environment failure (unreachable database), distinct from validation."""


@dataclass(frozen=True)
class Violation:
    level: int
    code: str
    message: str
    subject: str

    def __post_init__(self) -> None:
        if self.code not in CODES:
            raise ValueError(f"unknown violation code {self.code!r}")


@dataclass(frozen=True)
class ValidationReport:
    level1: Optional[bool]
    level2: Optional[bool]
    level3: Optional[bool]
    violations: tuple[Violation, ...] = ()
    notes: tuple[str, ...] = ()
    row_count: Optional[int] = None

    @property
    def ok(self) -> bool:
        return bool(self.level1) and self.level2 is not False and self.level3 is not False

    def by_code(self, code: str) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.code == code)


def report_document(report: ValidationReport) -> str:
    doc = {
        "level1": report.level1,
        "level2": report.level2,
        "level3": report.level3,
        "ok": report.ok,
        "violations": [
            {"level": v.level, "code": v.code, "message": v.message, "subject": v.subject}
            for v in report.violations
        ],
        "notes": list(report.notes),
        "row_count": report.row_count,
    }
    return canonical_json(doc)


# ---------------------------------------------------------------------------
# Level 1: execution
# ---------------------------------------------------------------------------


def validate_execution(sql: str, db_path: Union[str, Path]) -> ValidationReport:
    """Execute read-only; engine failures become SYNTAX/EXECUTION violations."""
    db_path = Path(db_path)
    if not db_path.is_file():
        raise InfrastructureError(f"database not found: {db_path}")
    try:
        conn = sqlite3.connect(f"file:{db_path}?mode=ro", uri=True)
    except sqlite3.Error as exc:
        raise InfrastructureError(f"cannot open database {db_path}: {exc}") from exc
    try:
        cur = conn.execute(sql)
        rows = cur.fetchall()
        return ValidationReport(level1=True, level2=None, level3=None, row_count=len(rows))
    except sqlite3.Error as exc:
        message = str(exc)
        code = "SYNTAX" if "syntax error" in message.lower() else "EXECUTION"
        violation = Violation(1, code, message, subject=sql.strip().split("\n")[0][:80])
        return ValidationReport(
            level1=False, level2=None, level3=None, violations=(violation,)
        )
    finally:
        conn.close()


# ---------------------------------------------------------------------------
# Binding helpers
# ---------------------------------------------------------------------------


class _Binding:
    """Resolves alias/table qualifiers and bare columns against the query."""

    def __init__(self, ast: Query, schema: Optional[Schema]):
        self.schema = schema
        self.alias_to_table: dict[str, str] = {}
        self.base_tables: list[str] = []
        for ref in ast.all_tables():
            resolved = self._resolve_schema_table(ref.name)
            self.base_tables.append(resolved)
            self.alias_to_table[ref.binding_name().lower()] = resolved
            self.alias_to_table.setdefault(ref.name.lower(), resolved)

    def _resolve_schema_table(self, name: str) -> str:
        if self.schema is not None:
            for t in self.schema.table_names:
                if t.lower() == name.lower():
                    return t
        return name

    def table_of(self, col: ColumnRef) -> Optional[str]:
        if col.qualifier:
            return self.alias_to_table.get(col.qualifier.lower())
        if self.schema is not None:
            owners = [
                t
                for t in dict.fromkeys(self.base_tables)
                if self.schema.has_table(t)
                and any(c.name.lower() == col.name.lower() for c in self.schema.table(t).columns)
            ]
            if len(owners) == 1:
                return owners[0]
        if len(set(self.base_tables)) == 1:
            return self.base_tables[0]
        return None


# ---------------------------------------------------------------------------
# Level 2: semantic consistency
# ---------------------------------------------------------------------------


def _join_column_pairs(ast: Query, binding: _Binding) -> list[tuple[str, str, str]]:
    """(table_a, table_b, rendered condition) for every cross-table equality."""
    conditions = [j.condition for j in ast.joins if j.condition is not None]
    if ast.where is not None:
        conditions.append(ast.where)
    pairs = []
    for cond in conditions:
        for node in walk(cond):
            if (
                isinstance(node, BinaryOp)
                and node.op == "="
                and isinstance(node.left, ColumnRef)
                and isinstance(node.right, ColumnRef)
            ):
                ta = binding.table_of(node.left)
                tb = binding.table_of(node.right)
                if ta and tb and ta != tb:
                    rendered = f"{node.left.display()} = {node.right.display()}"
                    pairs.append((min(ta, tb), max(ta, tb), rendered))
    return pairs


def validate_semantic(
    ast: Query,
    terminals: TerminalSet,
    scaffold: Optional[SteinerScaffold],
    entities: Sequence[MathEntity] = (),
    schema: Optional[Schema] = None,
    weights: CostWeights = DEFAULT_WEIGHTS,
    provider: Optional[EmbeddingProvider] = None,
) -> tuple[bool, list[Violation]]:
    provider = provider or default_provider()
    violations: list[Violation] = []
    binding = _Binding(ast, schema)
    present = {t.lower() for t in binding.base_tables}

    for terminal in terminals.tables:
        if terminal.lower() not in present:
            violations.append(
                Violation(
                    2,
                    "MISSING_TERMINAL",
                    f"terminal table {terminal!r} absent from FROM/JOIN",
                    subject=terminal,
                )
            )

    scaffold_pairs = scaffold.edge_pairs() if scaffold is not None else set()
    for ta, tb, rendered in _join_column_pairs(ast, binding):
        allowed = (ta, tb) in scaffold_pairs
        if not allowed and schema is not None:
            allowed = schema.has_fk(ta, tb)
        if not allowed:
            violations.append(
                Violation(
                    2,
                    "IRRELEVANT_JOIN",
                    f"join {rendered} links {ta} and {tb}, which share no scaffold edge or FK",
                    subject=f"{ta}~{tb}",
                )
            )

    referenced_names = [c.name for c in _all_query_columns(ast)]
    referenced_names += [item.alias for item in ast.select_items if item.alias]
    schema_columns = (
        [c.name for t in schema.tables for c in t.columns] if schema is not None else None
    )
    seen_phrases: set[str] = set()
    for entity in entities:
        for phrase in entity.target_attributes:
            if phrase in seen_phrases:
                continue
            seen_phrases.add(phrase)
            if any(
                phrase_matches_name(phrase, name, weights, provider)
                for name in referenced_names
            ):
                continue
            # Only resolvable attributes can be demanded of the query; a
            # phrase matching no schema column is reported by decomposition
            # as unmatched, not here.
            if schema_columns is not None and not any(
                phrase_matches_name(phrase, name, weights, provider)
                for name in schema_columns
            ):
                continue
            violations.append(
                Violation(
                    2,
                    "UNMAPPED_ATTRIBUTE",
                    f"attribute {phrase!r} from the question maps to no column in the query",
                    subject=phrase,
                )
            )

    return (not violations, violations)


def _all_query_columns(ast: Query) -> list[ColumnRef]:
    cols: list[ColumnRef] = []
    for item in ast.select_items:
        if not isinstance(item.expr, Star):
            cols += columns_in(item.expr)
    for j in ast.joins:
        if j.condition is not None:
            cols += columns_in(j.condition)
    for clause in (ast.where, ast.having):
        if clause is not None:
            cols += columns_in(clause)
    for expr in ast.group_by:
        cols += columns_in(expr)
    for expr, _d in ast.order_by:
        cols += columns_in(expr)
    return cols


# ---------------------------------------------------------------------------
# Level 3: mathematical logic
# ---------------------------------------------------------------------------


def _expr_fingerprint(expr) -> str:
    """Structural signature for matching SELECT items to GROUP BY keys."""
    return repr(expr).lower()


def _groupby_violations(ast: Query) -> list[Violation]:
    has_aggregate = any(aggregates_in(item.expr) for item in ast.select_items if not isinstance(item.expr, Star))
    if ast.having is not None:
        has_aggregate = has_aggregate or bool(aggregates_in(ast.having))
    if not has_aggregate and not ast.group_by:
        return []

    group_cols = {c.name.lower() for expr in ast.group_by for c in [expr] if isinstance(expr, ColumnRef)}
    group_prints = {_expr_fingerprint(e) for e in ast.group_by}
    violations = []
    for item in ast.select_items:
        expr = item.expr
        if isinstance(expr, Star):
            violations.append(
                Violation(
                    3,
                    "GROUPBY_RULE",
                    "SELECT * cannot be grouped; enumerate grouped columns",
                    subject="*",
                )
            )
            continue
        if aggregates_in(expr):
            continue
        if item.alias and item.alias.lower() in group_cols:
            continue
        if _expr_fingerprint(expr) in group_prints:
            continue
        offending = [c for c in columns_in(expr) if c.name.lower() not in group_cols]
        if isinstance(expr, ColumnRef):
            if expr.name.lower() not in group_cols:
                violations.append(
                    Violation(
                        3,
                        "GROUPBY_RULE",
                        f"non-aggregated column {expr.display()} missing from GROUP BY",
                        subject=expr.display(),
                    )
                )
        elif offending:
            subject = item.alias or offending[0].display()
            violations.append(
                Violation(
                    3,
                    "GROUPBY_RULE",
                    f"non-aggregated expression {subject!r} missing from GROUP BY",
                    subject=subject,
                )
            )
    return violations


def _aggregate_inventory(ast: Query) -> list[FuncCall]:
    calls: list[FuncCall] = []
    for item in ast.select_items:
        if not isinstance(item.expr, Star):
            calls += aggregates_in(item.expr)
    if ast.having is not None:
        calls += aggregates_in(ast.having)
    for expr, _d in ast.order_by:
        calls += aggregates_in(expr)
    return calls


def _division_avg_targets(ast: Query) -> list[str]:
    """Columns X where the query computes SUM(X) / COUNT(...): the AVG idiom."""
    targets = []
    for item in ast.select_items:
        if isinstance(item.expr, Star):
            continue
        for node in walk(item.expr):
            if isinstance(node, BinaryOp) and node.op == "/":
                sums = [f for f in aggregates_in(node.left) if f.name == "SUM"]
                counts = [f for f in aggregates_in(node.right) if f.name == "COUNT"]
                if sums and counts:
                    for f in sums:
                        if f.args:
                            targets.extend(c.name for c in columns_in(f.args[0]))
    return targets


def _match_column(
    phrase: str,
    names: Sequence[str],
    weights: CostWeights,
    provider: EmbeddingProvider,
) -> bool:
    return any(phrase_matches_name(phrase, n, weights, provider) for n in names)


def _agg_violations(
    ast: Query,
    entities: Sequence[MathEntity],
    weights: CostWeights,
    provider: EmbeddingProvider,
) -> list[Violation]:
    calls = _aggregate_inventory(ast)
    division_avg = _division_avg_targets(ast)
    violations = []
    for entity in entities:
        if entity.kind != "aggregation" or entity.operation not in (
            "SUM", "COUNT", "AVG", "MIN", "MAX",
        ):
            continue
        op = entity.operation
        targets = entity.target_attributes
        matched = False
        for call in calls:
            if call.name != op:
                continue
            if not targets:
                matched = True
                break
            if call.star:
                matched = op == "COUNT"
                if matched:
                    break
                continue
            arg_cols = [c.name for a in call.args for c in columns_in(a)]
            if any(_match_column(t, arg_cols, weights, provider) for t in targets):
                matched = True
                break
        if not matched and op == "AVG":
            matched = any(
                _match_column(t, division_avg, weights, provider) for t in targets
            ) or (not targets and bool(division_avg))
        if not matched and op == "COUNT":
            matched = any(c.name == "COUNT" and c.star for c in calls) and not targets
        if not matched:
            described = f"{op}({', '.join(targets) if targets else '*'})"
            violations.append(
                Violation(
                    3,
                    "AGG_MISMATCH",
                    f"no aggregate in the query implements {described}",
                    subject=described,
                )
            )
    return violations


_DATE_PATTERNS = (
    re.compile(r"^(\d{4})-(\d{2})-(\d{2})$"),
    re.compile(r"^(\d{4})(\d{2})(\d{2})$"),
)


def _as_date(value) -> Optional[_dt.date]:
    if isinstance(value, _dt.date):
        return value
    if isinstance(value, str):
        for pat in _DATE_PATTERNS:
            m = pat.match(value.strip())
            if m:
                try:
                    return _dt.date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
                except ValueError:
                    return None
    return None


def _literal_equal(expected, actual) -> bool:
    exp_date = _as_date(expected)
    if exp_date is not None:
        return _as_date(actual) == exp_date
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        return float(expected) == float(actual)
    return expected == actual


def _literal_value(expr) -> Optional[object]:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, UnaryOp) and expr.op == "-" and isinstance(expr.operand, Literal):
        value = expr.operand.value
        if isinstance(value, (int, float)):
            return -value
    return None


@dataclass(frozen=True)
class _Predicate:
    column: str
    op: str
    value: object = None
    second: object = None  # BETWEEN upper bound


def _collect_predicates(ast: Query) -> list[_Predicate]:
    preds: list[_Predicate] = []
    trees = [t for t in (ast.where, ast.having) if t is not None]
    flip = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}
    for tree in trees:
        for node in walk(tree):
            if isinstance(node, BinaryOp) and node.op in flip:
                left_col = node.left if isinstance(node.left, ColumnRef) else None
                right_col = node.right if isinstance(node.right, ColumnRef) else None
                left_lit = _literal_value(node.left)
                right_lit = _literal_value(node.right)
                if left_col is not None and right_lit is not None:
                    preds.append(_Predicate(left_col.name, node.op, right_lit))
                elif right_col is not None and left_lit is not None:
                    preds.append(_Predicate(right_col.name, flip[node.op], left_lit))
            elif isinstance(node, IsNull) and isinstance(node.expr, ColumnRef):
                op = "IS NOT NULL" if node.negated else "IS NULL"
                preds.append(_Predicate(node.expr.name, op))
            elif isinstance(node, BetweenOp):
                cols = columns_in(node.expr)
                lo, hi = _literal_value(node.low), _literal_value(node.high)
                if cols and lo is not None and hi is not None:
                    preds.append(_Predicate(cols[0].name, "BETWEEN", lo, hi))
                    preds.append(_Predicate(cols[0].name, ">=", lo))
                    preds.append(_Predicate(cols[0].name, "<=", hi))
    return preds


def _constraint_violations(
    ast: Query,
    entities: Sequence[MathEntity],
    weights: CostWeights,
    provider: EmbeddingProvider,
) -> list[Violation]:
    preds = _collect_predicates(ast)
    violations = []
    for entity in entities:
        if entity.kind not in ("comparison", "range", "temporal"):
            continue
        if entity.operation in ("LAST", "FIRST"):
            continue  # ordering cues have no single-predicate translation
        expected_op = entity.operation

        def column_ok(pred: _Predicate) -> bool:
            if not entity.target_attributes:
                return True
            return any(
                phrase_matches_name(t, pred.column, weights, provider)
                for t in entity.target_attributes
            )

        matched = False
        if expected_op in ("IS NULL", "IS NOT NULL"):
            matched = any(p.op == expected_op and column_ok(p) for p in preds)
        elif expected_op == "BETWEEN":
            lo, hi = entity.literals
            for p in preds:
                if p.op == "BETWEEN" and column_ok(p):
                    if _literal_equal(lo, p.value) and _literal_equal(hi, p.second):
                        matched = True
                        break
            if not matched:
                has_lo = any(
                    p.op == ">=" and column_ok(p) and _literal_equal(lo, p.value)
                    for p in preds
                )
                has_hi = any(
                    p.op == "<=" and column_ok(p) and _literal_equal(hi, p.value)
                    for p in preds
                )
                matched = has_lo and has_hi
        else:
            value = entity.literals[0] if entity.literals else None
            for p in preds:
                if p.op == expected_op and column_ok(p):
                    if value is None or _literal_equal(value, p.value):
                        matched = True
                        break
        if not matched:
            target = ", ".join(entity.target_attributes) or "<any>"
            rendered = f"{target} {expected_op} {list(entity.literals) or ''}".strip()
            violations.append(
                Violation(
                    3,
                    "CONSTRAINT_MISMATCH",
                    f"constraint from the question not found in WHERE/HAVING: {rendered}",
                    subject=rendered,
                )
            )
    return violations


def validate_math(
    ast: Query,
    entities: Sequence[MathEntity],
    weights: CostWeights = DEFAULT_WEIGHTS,
    provider: Optional[EmbeddingProvider] = None,
) -> tuple[bool, list[Violation]]:
    provider = provider or default_provider()
    violations = (
        _groupby_violations(ast)
        + _agg_violations(ast, entities, weights, provider)
        + _constraint_violations(ast, entities, weights, provider)
    )
    return (not violations, violations)


# ---------------------------------------------------------------------------
# Aggregate report
# ---------------------------------------------------------------------------


def validate_all(
    sql: str,
    db_path: Union[str, Path],
    terminals: TerminalSet,
    scaffold: Optional[SteinerScaffold],
    entities: Sequence[MathEntity] = (),
    schema: Optional[Schema] = None,
    weights: CostWeights = DEFAULT_WEIGHTS,
    provider: Optional[EmbeddingProvider] = None,
) -> ValidationReport:
    """Level 1 first; on pass, levels 2 and 3 both run and are both reported."""
    level1 = validate_execution(sql, db_path)
    if not level1.level1:
        return level1
    try:
        ast = parse_sql(sql)
    except ParseError as exc:
        note = (
            f"levels 2-3 skipped, execution-only validation: {exc.message}"
            if exc.kind == "unsupported"
            else f"levels 2-3 skipped, query outside the validated subset: {exc.message}"
        )
        return ValidationReport(
            level1=True,
            level2=None,
            level3=None,
            notes=(note,),
            row_count=level1.row_count,
        )
    ok2, v2 = validate_semantic(ast, terminals, scaffold, entities, schema, weights, provider)
    ok3, v3 = validate_math(ast, entities, weights, provider)
    return ValidationReport(
        level1=True,
        level2=ok2,
        level3=ok3,
        violations=tuple(v2 + v3),
        row_count=level1.row_count,
    )
