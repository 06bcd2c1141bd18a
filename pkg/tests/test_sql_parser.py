import pytest

from joinscaffold.sqlcheck.parser import (
    BetweenOp,
    BinaryOp,
    CaseExpr,
    ColumnRef,
    FuncCall,
    InOp,
    IsNull,
    Literal,
    ParseError,
    SelectItem,
    Star,
    TableRef,
    UnaryOp,
    aggregates_in,
    columns_in,
    parse_sql,
)


def test_minimal_select():
    ast = parse_sql("SELECT a FROM t")
    assert ast.select_items == (SelectItem(ColumnRef(None, "a"), None),)
    assert ast.from_tables == (TableRef("t", None, None),)
    assert ast.joins == ()


def test_golden_join_aggregate_ast():
    ast = parse_sql(
        "SELECT t1.a, SUM(t2.b) FROM t1 JOIN t2 ON t1.id=t2.id GROUP BY t1.a"
    )
    assert ast.select_items[0].expr == ColumnRef("t1", "a")
    assert ast.select_items[1].expr == FuncCall("SUM", (ColumnRef("t2", "b"),))
    join = ast.joins[0]
    assert join.table == TableRef("t2", None, None)
    assert join.condition == BinaryOp("=", ColumnRef("t1", "id"), ColumnRef("t2", "id"))
    assert ast.group_by == (ColumnRef("t1", "a"),)


def test_syntax_error_offset_zero():
    with pytest.raises(ParseError) as err:
        parse_sql("SELEC a FROM t")
    assert err.value.kind == "syntax"
    assert err.value.offset == 0


def test_empty_text_rejected():
    with pytest.raises(ParseError):
        parse_sql("   ")


@pytest.mark.parametrize(
    "sql,needle",
    [
        ("WITH x AS (SELECT 1) SELECT * FROM x", "common table expression"),
        ("SELECT a FROM (SELECT b FROM t)", "subquery"),
        ("SELECT (SELECT 1) FROM t", "subquery"),
        ("SELECT a FROM t WHERE b IN (SELECT c FROM u)", "subquery"),
        ("SELECT RANK() OVER (ORDER BY a) FROM t", "window function"),
        ("SELECT a FROM UNNEST(items)", "UNNEST"),
        ("SELECT a FROM t UNION SELECT b FROM u", "set operation"),
        ("SELECT a FROM t NATURAL JOIN u", "NATURAL JOIN"),
    ],
)
def test_unsupported_constructs(sql, needle):
    with pytest.raises(ParseError) as err:
        parse_sql(sql)
    assert err.value.kind == "unsupported"
    assert needle in err.value.message


def test_case_expression():
    ast = parse_sql(
        "SELECT CASE WHEN x >= 1 THEN 'hi' WHEN x IS NULL THEN 'lo' ELSE 'mid' END AS bucket FROM t"
    )
    expr = ast.select_items[0].expr
    assert isinstance(expr, CaseExpr)
    assert len(expr.whens) == 2
    assert expr.else_ == Literal("string", "mid")
    assert ast.select_items[0].alias == "bucket"


def test_between_and_in():
    ast = parse_sql(
        "SELECT a FROM t WHERE a BETWEEN 1 AND 5 AND b IN ('x', 'y') AND c NOT BETWEEN 2 AND 3"
    )
    nodes = [n for n in _walk_where(ast)]
    betweens = [n for n in nodes if isinstance(n, BetweenOp)]
    ins = [n for n in nodes if isinstance(n, InOp)]
    assert len(betweens) == 2
    assert betweens[1].negated
    assert len(ins) == 1


def _walk_where(ast):
    from joinscaffold.sqlcheck.parser import walk

    return walk(ast.where)


def test_is_null_variants():
    ast = parse_sql("SELECT a FROM t WHERE a IS NULL AND b IS NOT NULL")
    nodes = [n for n in _walk_where(ast) if isinstance(n, IsNull)]
    assert [n.negated for n in nodes] == [False, True]


def test_aliases_and_qualified_star():
    ast = parse_sql("SELECT t.*, u.name full_name FROM tbl t JOIN users AS u ON t.id = u.id")
    assert ast.select_items[0].expr == Star(qualifier="t")
    assert ast.select_items[1].alias == "full_name"
    assert ast.from_tables[0] == TableRef("tbl", "t", None)
    assert ast.joins[0].table == TableRef("users", "u", None)


def test_schema_qualified_table():
    ast = parse_sql("SELECT a FROM analytics.events e")
    ref = ast.from_tables[0]
    assert ref.name == "events"
    assert ref.schema_prefix == "analytics"
    assert ref.alias == "e"


def test_arithmetic_precedence():
    ast = parse_sql("SELECT a + b * c FROM t")
    expr = ast.select_items[0].expr
    assert expr == BinaryOp(
        "+", ColumnRef(None, "a"), BinaryOp("*", ColumnRef(None, "b"), ColumnRef(None, "c"))
    )


def test_negative_literal():
    ast = parse_sql("SELECT a FROM t WHERE temp = -10")
    comparison = ast.where
    assert comparison.right == UnaryOp("-", Literal("number", 10))


def test_count_star_and_distinct():
    ast = parse_sql("SELECT COUNT(*), COUNT(DISTINCT visitor_id) FROM t")
    first, second = (item.expr for item in ast.select_items)
    assert first.star and first.name == "COUNT"
    assert second.distinct and second.args == (ColumnRef(None, "visitor_id"),)
    assert len(aggregates_in(first)) == 1


def test_order_limit_semicolon():
    ast = parse_sql("SELECT a FROM t ORDER BY a DESC LIMIT 10;")
    assert ast.order_by == ((ColumnRef(None, "a"), "DESC"),)
    assert ast.limit == 10


def test_trailing_garbage_rejected():
    with pytest.raises(ParseError) as err:
        parse_sql("SELECT a FROM t extra nonsense")
    assert err.value.kind == "syntax"


def test_quoted_identifiers_and_strings():
    ast = parse_sql("SELECT \"odd name\", `tick`, [brack] FROM t WHERE s = 'it''s'")
    names = [item.expr.name for item in ast.select_items]
    assert names == ["odd name", "tick", "brack"]
    assert ast.where.right == Literal("string", "it's")


def test_columns_in_collects_nested():
    ast = parse_sql("SELECT SUM(t.a + u.b) / COUNT(c) FROM t JOIN u ON t.id = u.id")
    cols = {c.display() for c in columns_in(ast.select_items[0].expr)}
    assert cols == {"t.a", "u.b", "c"}


def test_where_function_call():
    ast = parse_sql("SELECT a FROM t WHERE substr(date, 1, 6) = '202301'")
    fn = ast.where.left
    assert isinstance(fn, FuncCall)
    assert fn.name == "SUBSTR"
    assert not fn.is_aggregate()
