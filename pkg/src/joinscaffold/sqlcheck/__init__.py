"""SQL parsing and three-level validation."""

from .parser import (  # noqa: F401
    BetweenOp,
    BinaryOp,
    CaseExpr,
    ColumnRef,
    FuncCall,
    IsNull,
    Join,
    Literal,
    ParseError,
    Query,
    SelectItem,
    Star,
    TableRef,
    UnaryOp,
    parse_sql,
)
from .validate import (  # noqa: F401
    InfrastructureError,
    ValidationReport,
    Violation,
    report_document,
    validate_all,
    validate_execution,
    validate_math,
    validate_semantic,
)
