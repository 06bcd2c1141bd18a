"""Decompose a natural-language question into entities and terminal tables.

The extractor is a deterministic keyword/pattern pass: aggregations,
comparisons, null checks, ranges, grouping cues. Dependency analysis then
maps attribute phrases to owning tables and completes FK join paths.
"""

import json

from joinscaffold import decompose_question, decomposition_document, load_schema_from_document

SCHEMA = json.dumps({
    "tables": [
        {"name": "ga_sessions", "columns": [
            {"name": "session_id", "type": "INTEGER", "pk": True},
            {"name": "fullVisitorId", "type": "TEXT"},
            {"name": "date", "type": "DATE"}]},
        {"name": "totals", "columns": [
            {"name": "session_id", "type": "INTEGER"},
            {"name": "transactions", "type": "INTEGER"},
            {"name": "pageviews", "type": "INTEGER"}]},
        {"name": "hits", "columns": [
            {"name": "hit_id", "type": "INTEGER", "pk": True},
            {"name": "session_id", "type": "INTEGER"},
            {"name": "productRevenue", "type": "REAL"}]},
    ],
    "foreign_keys": [
        {"from_table": "totals", "from_column": "session_id",
         "to_table": "ga_sessions", "to_column": "session_id"},
        {"from_table": "hits", "from_column": "session_id",
         "to_table": "ga_sessions", "to_column": "session_id"},
    ],
})

QUESTION = (
    "Between April 1 and July 31 of 2017, using the hits product revenue data "
    "along with the totals transactions to classify sessions as purchase "
    "(transactions >= 1 and productRevenue not null) or non-purchase "
    "(transactions null and productRevenue null), compare the average "
    "pageviews per visitor for each group by month."
)

schema = load_schema_from_document(SCHEMA)
result = decompose_question(QUESTION, schema)

print("extracted entities:")
for e in result.entities:
    print(f"  {e.kind:12s} {e.operation:12s} targets={list(e.target_attributes)} literals={list(e.literals)}")

print("\nterminal tables (with the reason each one is required):")
for table, reason in result.terminals.entries:
    print(f"  {table:12s} {reason}")

print("\nphrases that matched no column:", list(result.unmatched))
print()
print(decomposition_document(result))
