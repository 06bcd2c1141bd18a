"""Shared fixture data: golden questions, schema documents, and databases."""

from __future__ import annotations

import json
import sqlite3
from pathlib import Path

COLLECTOR_QUESTION = (
    "If the status of a data collector shows 'shutdown' and its installation "
    "altitude is 3000 meters, assuming the last data collection record before "
    "shutdown indicates a temperature of -10°C, please calculate the "
    "atmospheric pressure value at that location and analyze possible reasons "
    "for the shutdown."
)

ANALYTICS_QUESTION = (
    "Between April 1 and July 31 of 2017, using the hits product revenue data "
    "along with the totals transactions to classify sessions as purchase "
    "(transactions >= 1 and productRevenue not null) or non-purchase "
    "(transactions null and productRevenue null), compare the average "
    "pageviews per visitor for each group by month."
)

COLLECTOR_SCHEMA_DOC = json.dumps(
    {
        "tables": [
            {
                "name": "collectors",
                "columns": [
                    {"name": "collector_id", "type": "TEXT", "pk": True},
                    {"name": "status", "type": "TEXT"},
                    {"name": "installation_altitude_m", "type": "REAL"},
                ],
            },
            {
                "name": "readings",
                "columns": [
                    {"name": "reading_id", "type": "INTEGER", "pk": True},
                    {"name": "collector_id", "type": "TEXT"},
                    {"name": "recorded_at", "type": "TIMESTAMP"},
                    {"name": "temperature_c", "type": "REAL"},
                ],
            },
        ],
        "foreign_keys": [
            {
                "from_table": "readings",
                "from_column": "collector_id",
                "to_table": "collectors",
                "to_column": "collector_id",
            }
        ],
    }
)

ANALYTICS_SCHEMA_DOC = json.dumps(
    {
        "tables": [
            {
                "name": "ga_sessions",
                "columns": [
                    {"name": "session_id", "type": "INTEGER", "pk": True},
                    {"name": "fullVisitorId", "type": "TEXT"},
                    {"name": "date", "type": "DATE"},
                ],
            },
            {
                "name": "totals",
                "columns": [
                    {"name": "session_id", "type": "INTEGER"},
                    {"name": "transactions", "type": "INTEGER"},
                    {"name": "pageviews", "type": "INTEGER"},
                ],
            },
            {
                "name": "hits",
                "columns": [
                    {"name": "hit_id", "type": "INTEGER", "pk": True},
                    {"name": "session_id", "type": "INTEGER"},
                    {"name": "productRevenue", "type": "REAL"},
                ],
            },
        ],
        "foreign_keys": [
            {
                "from_table": "totals",
                "from_column": "session_id",
                "to_table": "ga_sessions",
                "to_column": "session_id",
            },
            {
                "from_table": "hits",
                "from_column": "session_id",
                "to_table": "ga_sessions",
                "to_column": "session_id",
            },
        ],
    }
)

# Appendix-case edge costs for the analytics graph.
ANALYTICS_COST_OVERRIDES = {
    ("ga_sessions", "totals"): 0.08,
    ("ga_sessions", "hits"): 0.09,
    ("hits", "totals"): 0.58,
}

# Flattened-relational rendering of the analytics query: same joins,
# classification, aggregation, grouping, and date window.
ANALYTICS_GOLDEN_SQL = """\
SELECT substr(g.date, 1, 6) AS month,
       CASE WHEN t.transactions >= 1 AND h.productRevenue IS NOT NULL THEN 'Purchase'
            WHEN t.transactions IS NULL AND h.productRevenue IS NULL THEN 'Non-Purchase'
            END AS session_type,
       SUM(t.pageviews) / COUNT(DISTINCT g.fullVisitorId) AS avg_pageviews_per_visitor
FROM ga_sessions g
JOIN totals t ON g.session_id = t.session_id
JOIN hits h ON g.session_id = h.session_id
WHERE g.date BETWEEN '20170401' AND '20170731'
  AND ((t.transactions >= 1 AND h.productRevenue IS NOT NULL)
       OR (t.transactions IS NULL AND h.productRevenue IS NULL))
GROUP BY month, session_type
ORDER BY month, session_type;
"""


def build_analytics_db(path: Path) -> Path:
    conn = sqlite3.connect(path)
    conn.executescript(
        """
        CREATE TABLE ga_sessions (
            session_id INTEGER PRIMARY KEY,
            fullVisitorId TEXT,
            date DATE
        );
        CREATE TABLE totals (
            session_id INTEGER REFERENCES ga_sessions(session_id),
            transactions INTEGER,
            pageviews INTEGER
        );
        CREATE TABLE hits (
            hit_id INTEGER PRIMARY KEY,
            session_id INTEGER REFERENCES ga_sessions(session_id),
            productRevenue REAL
        );
        """
    )
    conn.executemany(
        "INSERT INTO ga_sessions VALUES (?, ?, ?)",
        [
            (1, "visitor_a", "20170405"),
            (2, "visitor_b", "20170510"),
            (3, "visitor_c", "20170620"),
            (4, "visitor_a", "20170715"),
        ],
    )
    conn.executemany(
        "INSERT INTO totals VALUES (?, ?, ?)",
        [(1, 2, 10), (2, None, 5), (3, 1, 8), (4, None, 3)],
    )
    conn.executemany(
        "INSERT INTO hits VALUES (?, ?, ?)",
        [(1, 1, 49.99), (2, 2, None), (3, 3, 20.0), (4, 4, None)],
    )
    conn.commit()
    conn.close()
    return path


def build_collectors_db(path: Path) -> Path:
    conn = sqlite3.connect(path)
    conn.executescript(
        """
        CREATE TABLE collectors (
            collector_id TEXT PRIMARY KEY,
            status TEXT,
            installation_altitude_m REAL
        );
        CREATE TABLE readings (
            reading_id INTEGER PRIMARY KEY,
            collector_id TEXT REFERENCES collectors(collector_id),
            recorded_at TIMESTAMP,
            temperature_c REAL
        );
        """
    )
    conn.executemany(
        "INSERT INTO collectors VALUES (?, ?, ?)",
        [("bq004", "shutdown", 3000.0), ("bq005", "active", 150.0)],
    )
    conn.executemany(
        "INSERT INTO readings VALUES (?, ?, ?, ?)",
        [
            (1, "bq004", "2024-01-05 10:00:00", -10.0),
            (2, "bq004", "2024-01-04 10:00:00", -8.5),
            (3, "bq005", "2024-01-05 10:00:00", 12.0),
        ],
    )
    conn.commit()
    conn.close()
    return path


def build_company_db(path: Path) -> Path:
    """departments/employees/projects/assignments corpus database."""
    conn = sqlite3.connect(path)
    conn.executescript(
        """
        CREATE TABLE departments (
            dept_id INTEGER PRIMARY KEY,
            dept_name TEXT
        );
        CREATE TABLE employees (
            emp_id INTEGER PRIMARY KEY,
            name TEXT,
            salary REAL,
            dept_id INTEGER REFERENCES departments(dept_id)
        );
        CREATE TABLE projects (
            proj_id INTEGER PRIMARY KEY,
            title TEXT,
            budget REAL
        );
        CREATE TABLE assignments (
            assign_id INTEGER PRIMARY KEY,
            emp_id INTEGER REFERENCES employees(emp_id),
            proj_id INTEGER REFERENCES projects(proj_id),
            hours REAL
        );
        """
    )
    conn.executemany(
        "INSERT INTO departments VALUES (?, ?)",
        [(1, "Sales"), (2, "Engineering"), (3, "Support")],
    )
    conn.executemany(
        "INSERT INTO employees VALUES (?, ?, ?, ?)",
        [
            (1, "Ada", 92000.0, 2),
            (2, "Bo", 48000.0, 1),
            (3, "Cy", 61000.0, 1),
            (4, "Dee", 75000.0, 2),
            (5, "Ed", 39000.0, 3),
        ],
    )
    conn.executemany(
        "INSERT INTO projects VALUES (?, ?, ?)",
        [(1, "Atlas", 100000.0), (2, "Borealis", 50000.0)],
    )
    conn.executemany(
        "INSERT INTO assignments VALUES (?, ?, ?, ?)",
        [(1, 1, 1, 120.0), (2, 2, 1, 80.0), (3, 3, 2, 60.0), (4, 4, 2, 100.0)],
    )
    conn.commit()
    conn.close()
    return path
