"""Validate candidate SQL at three levels against a scaffold.

Level 1 executes read-only; level 2 checks terminals, joins, and attribute
mapping against the scaffold; level 3 audits the group-by rule, aggregate
agreement, and constraint translation.
"""

import sqlite3
import tempfile
from pathlib import Path

from joinscaffold import (
    MathEntity,
    SteinerScaffold,
    TerminalSet,
    load_schema_from_database,
    report_document,
    validate_all,
)

workdir = Path(tempfile.mkdtemp())
db = workdir / "store.db"
conn = sqlite3.connect(db)
conn.executescript(
    """
    CREATE TABLE departments (dept_id INTEGER PRIMARY KEY, dept_name TEXT);
    CREATE TABLE employees (
        emp_id INTEGER PRIMARY KEY, name TEXT, salary REAL,
        dept_id INTEGER REFERENCES departments(dept_id));
    INSERT INTO departments VALUES (1, 'Sales'), (2, 'Engineering');
    INSERT INTO employees VALUES
        (1, 'Ada', 92000, 2), (2, 'Bo', 48000, 1), (3, 'Cy', 61000, 1);
    """
)
conn.commit()
conn.close()

schema = load_schema_from_database(db)
terminals = TerminalSet.from_pairs(
    [("departments", "direct-reference"), ("employees", "direct-reference")]
)
scaffold = SteinerScaffold.build(
    ["departments", "employees"], {("departments", "employees"): 0.1}
)
entities = (
    MathEntity("aggregation", "AVG", ("salary",)),
    MathEntity("comparison", ">=", ("salary",), (50000,)),
)

good = (
    "SELECT d.dept_name, AVG(e.salary) AS avg_salary "
    "FROM employees e JOIN departments d ON e.dept_id = d.dept_id "
    "WHERE e.salary >= 50000 GROUP BY d.dept_name"
)
print("a correct query passes all three levels:")
print(report_document(validate_all(good, db, terminals, scaffold, entities, schema)))

# The classic mistake: a bare column next to an aggregate without GROUP BY
# membership. SQLite executes it happily; level 3 catches it.
sloppy = (
    "SELECT d.dept_name, e.salary, AVG(e.salary) "
    "FROM employees e JOIN departments d ON e.dept_id = d.dept_id "
    "GROUP BY d.dept_name"
)
print("a sloppy query fails level 3 with GROUPBY_RULE:")
print(report_document(validate_all(sloppy, db, terminals, scaffold, entities, schema)))

# Dropping a required table fails level 2 with MISSING_TERMINAL.
partial = "SELECT name, salary FROM employees WHERE salary >= 50000"
print("a terminal-dropping query fails level 2:")
print(report_document(validate_all(partial, db, terminals, scaffold, entities, schema)))
