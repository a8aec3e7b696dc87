"""SQL-subset parser, checker and evaluator over the run's table catalog.

Grammar: SELECT projections FROM table [WHERE expr] [GROUP BY cols]
[ORDER BY col [ASC|DESC]] [LIMIT n]. Expressions cover arithmetic,
comparisons and boolean logic. Anything data-mutating is detected and
refused before execution.
"""

from .ast import (
    Aggregate,
    BinaryOp,
    ColumnRef,
    Literal,
    QueryIssue,
    SelectStmt,
    Star,
    UnaryOp,
    print_expr,
    print_query,
)
from .parser import parse_expression, parse_sql
from .engine import (
    catalog_fingerprint,
    check_query,
    eval_expr,
    execute_query,
    infer_expr_type,
    list_tables,
    render_result,
    run_query,
    table_info,
)

__all__ = [
    "Aggregate",
    "BinaryOp",
    "ColumnRef",
    "Literal",
    "QueryIssue",
    "SelectStmt",
    "Star",
    "UnaryOp",
    "catalog_fingerprint",
    "check_query",
    "eval_expr",
    "execute_query",
    "infer_expr_type",
    "list_tables",
    "parse_expression",
    "parse_sql",
    "print_expr",
    "print_query",
    "render_result",
    "run_query",
    "table_info",
]
