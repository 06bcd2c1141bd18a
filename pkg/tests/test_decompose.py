import datetime

import pytest

import golden

from joinscaffold.decompose import (
    MathEntity,
    TerminalSet,
    decompose_question,
    decomposition_document,
    extract_entities,
    find_containing_tables,
    fk_only_adjacency,
    phrase_matches_name,
)
from joinscaffold.schema import load_schema_from_document


def entity_index(entities):
    return {(e.kind, e.operation): e for e in entities}


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


def test_extract_average_groupings():
    q = "compare the average pageviews per visitor for each group by month"
    entities = extract_entities(q)
    idx = entity_index(entities)
    avg = idx[("aggregation", "AVG")]
    assert avg.target_attributes == ("pageviews",)
    grouping_targets = {
        e.target_attributes[0] for e in entities if e.kind == "grouping"
    }
    assert {"month", "group"} <= grouping_targets


def test_extract_no_math_entities():
    assert extract_entities("list all customers") == []


def test_extract_comparison_and_null_check():
    entities = extract_entities("transactions >= 1 and productRevenue not null")
    assert [(e.kind, e.operation) for e in entities] == [
        ("comparison", ">="),
        ("comparison", "IS NOT NULL"),
    ]
    ge = entities[0]
    assert ge.target_attributes == ("transactions",)
    assert ge.literals == (1,)
    nn = entities[1]
    assert nn.target_attributes == ("productRevenue",)


def test_extract_date_range_with_trailing_year():
    entities = extract_entities("Between April 1 and July 31 of 2017, show totals")
    assert entities[0].kind == "temporal"
    assert entities[0].operation == "BETWEEN"
    assert entities[0].literals == (
        datetime.date(2017, 4, 1),
        datetime.date(2017, 7, 31),
    )


def test_extract_numeric_range():
    entities = extract_entities("orders with totals between 5 and 10")
    ranges = [e for e in entities if e.kind == "range"]
    assert ranges and ranges[0].literals == (5, 10)


def test_extract_worded_comparisons():
    entities = extract_entities("show customers with at least 5 orders")
    comps = [e for e in entities if e.kind == "comparison"]
    assert comps[0].operation == ">="
    assert comps[0].target_attributes == ("orders",)
    assert comps[0].literals == (5,)


def test_extract_count_phrases():
    entities = extract_entities("how many employees are in each department")
    idx = entity_index(entities)
    assert ("aggregation", "COUNT") in idx
    assert idx[("aggregation", "COUNT")].target_attributes == ("employees",)


def test_extractor_is_deterministic():
    q = golden.ANALYTICS_QUESTION
    assert extract_entities(q) == extract_entities(q)


def test_extract_requires_text():
    with pytest.raises(ValueError):
        extract_entities("   ")


def test_entity_kind_validated():
    with pytest.raises(ValueError):
        MathEntity("nonsense", "OP")


# ---------------------------------------------------------------------------
# attribute matching
# ---------------------------------------------------------------------------


def test_find_containing_tables_exact(analytics_schema):
    found = find_containing_tables(["productRevenue"], analytics_schema)
    assert found.tables == ("hits",)
    assert found.matches["productRevenue"] == (("hits", "productRevenue"),)


def test_find_containing_tables_normalized_spacing(analytics_schema):
    found = find_containing_tables(["product revenue"], analytics_schema)
    assert found.tables == ("hits",)


def test_find_containing_tables_similarity(collectors_schema):
    found = find_containing_tables(["installation altitude"], collectors_schema)
    assert found.tables == ("collectors",)


def test_find_containing_tables_unmatched(analytics_schema):
    found = find_containing_tables(["zzqx flux"], analytics_schema)
    assert found.tables == ()
    assert found.unmatched == ("zzqx flux",)


def test_find_pageviews(analytics_schema):
    assert find_containing_tables(["pageviews"], analytics_schema).tables == ("totals",)


def test_phrase_matching_threshold():
    assert phrase_matches_name("temperature", "temperature_c")
    assert not phrase_matches_name("visitor", "pageviews")


# ---------------------------------------------------------------------------
# dependency analysis and terminals
# ---------------------------------------------------------------------------


def test_collector_question_terminals(collectors_schema):
    result = decompose_question(golden.COLLECTOR_QUESTION, collectors_schema)
    assert result.terminals.tables == ("collectors", "readings")


def test_analytics_question_terminals(analytics_schema):
    result = decompose_question(golden.ANALYTICS_QUESTION, analytics_schema)
    assert result.terminals.tables == ("ga_sessions", "hits", "totals")


def test_direct_fk_pair_adds_no_intermediates(collectors_schema):
    result = decompose_question(
        "average temperature_c per status", collectors_schema
    )
    assert result.terminals.tables == ("collectors", "readings")
    reasons = dict(result.terminals.entries)
    assert "join-path" not in reasons.values()


JOIN_PATH_DOC = """
{"tables": [
    {"name": "customers", "columns": [
        {"name": "customer_id", "type": "INTEGER", "pk": true},
        {"name": "name", "type": "TEXT"}]},
    {"name": "orders", "columns": [
        {"name": "order_id", "type": "INTEGER", "pk": true},
        {"name": "customer_id", "type": "INTEGER"}]},
    {"name": "order_items", "columns": [
        {"name": "item_id", "type": "INTEGER", "pk": true},
        {"name": "order_id", "type": "INTEGER"},
        {"name": "amount", "type": "REAL"}]}],
 "foreign_keys": [
    {"from_table": "orders", "from_column": "customer_id",
     "to_table": "customers", "to_column": "customer_id"},
    {"from_table": "order_items", "from_column": "order_id",
     "to_table": "orders", "to_column": "order_id"}]}
"""


def test_join_path_inserts_bridge_table():
    schema = load_schema_from_document(JOIN_PATH_DOC)
    result = decompose_question("average amount for each name", schema)
    assert result.terminals.tables == ("customers", "order_items", "orders")
    assert result.terminals.reason_of("orders") == "join-path"


def test_locality_unrelated_table_changes_nothing(analytics_schema):
    import json

    doc = json.loads(golden.ANALYTICS_SCHEMA_DOC)
    doc["tables"].append(
        {
            "name": "warehouses",
            "columns": [
                {"name": "warehouse_id", "type": "INTEGER", "pk": True},
                {"name": "shelf_label", "type": "TEXT"},
            ],
        }
    )
    bigger = load_schema_from_document(json.dumps(doc))
    base = decompose_question(golden.ANALYTICS_QUESTION, analytics_schema)
    extended = decompose_question(golden.ANALYTICS_QUESTION, bigger)
    assert base.terminals.tables == extended.terminals.tables


def test_every_terminal_reachable_from_an_entity(analytics_schema):
    result = decompose_question(golden.ANALYTICS_QUESTION, analytics_schema)
    edge_targets = {dst for _kind, _src, dst in result.graph.edges}
    for table in result.terminals.tables:
        assert table in edge_targets


def test_terminal_reasons_unique(analytics_schema):
    result = decompose_question(golden.ANALYTICS_QUESTION, analytics_schema)
    for table, reason in result.terminals.entries:
        assert reason in ("direct-reference", "join-path", "constraint")
    assert len({t for t, _ in result.terminals.entries}) == len(result.terminals.entries)


def test_fk_only_adjacency(analytics_schema):
    adj = fk_only_adjacency(analytics_schema)
    assert adj["ga_sessions"] == ("hits", "totals")
    assert adj["hits"] == ("ga_sessions",)


def test_terminal_set_api():
    ts = TerminalSet.from_pairs([("b", "constraint"), ("a", "direct-reference"), ("b", "join-path")])
    assert ts.tables == ("a", "b")
    assert ts.reason_of("b") == "constraint"  # first reason wins
    grown = ts.union(["c"], "join-path")
    assert grown.tables == ("a", "b", "c")
    assert "c" in grown and "z" not in grown


def test_decomposition_document_is_canonical(analytics_schema):
    result = decompose_question(golden.ANALYTICS_QUESTION, analytics_schema)
    doc = decomposition_document(result)
    assert doc == decomposition_document(
        decompose_question(golden.ANALYTICS_QUESTION, analytics_schema)
    )
    assert '"terminals"' in doc and '"unmatched"' in doc


def test_empty_terminals_warns():
    schema = load_schema_from_document(JOIN_PATH_DOC)
    result = decompose_question("average zzqx for each wwfp", schema)
    assert result.terminals.tables == ()
    assert result.warnings


# ---------------------------------------------------------------------------
# optional LLM-backed extractor
# ---------------------------------------------------------------------------


def test_llm_extractor_validates_and_builds():
    from joinscaffold.decompose import extract_entities_llm
    from joinscaffold.pipeline import StubGenerator

    reply = (
        '[{"kind": "aggregation", "operation": "AVG", "targets": ["pageviews"]},'
        ' {"kind": "comparison", "operation": ">=", "targets": ["transactions"],'
        '  "literals": [1]}]'
    )
    client = StubGenerator(default=reply)
    entities = extract_entities_llm("some question", client)
    assert [(e.kind, e.operation) for e in entities] == [
        ("aggregation", "AVG"),
        ("comparison", ">="),
    ]
    assert entities[1].literals == (1,)


@pytest.mark.parametrize(
    "reply",
    [
        "not json at all",
        '{"kind": "aggregation"}',
        '[{"operation": "AVG"}]',
        '[{"kind": "nonsense", "operation": "AVG"}]',
        '[{"kind": "aggregation", "operation": "AVG", "targets": [1]}]',
    ],
)
def test_llm_extractor_rejects_malformed(reply):
    from joinscaffold.decompose import extract_entities_llm
    from joinscaffold.pipeline import StubGenerator

    with pytest.raises(ValueError):
        extract_entities_llm("q", StubGenerator(default=reply))
