"""AST nodes, issue records and the canonical pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Literal:
    value: object  # int | float | str | bool


@dataclass(frozen=True)
class ColumnRef:
    name: str


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class UnaryOp:
    op: str  # "-" | "NOT"
    operand: object


@dataclass(frozen=True)
class BinaryOp:
    op: str  # + - * / = != < <= > >= AND OR
    left: object
    right: object


@dataclass(frozen=True)
class Aggregate:
    func: str  # count | sum | avg | min | max
    arg: object  # expression, or Star for COUNT(*)


@dataclass(frozen=True)
class OrderBy:
    column: str
    ascending: bool = True


@dataclass(frozen=True)
class SelectStmt:
    projections: tuple  # of expressions / Aggregate / Star
    table: str
    where: object | None = None
    group_by: tuple[str, ...] = ()
    order_by: OrderBy | None = None
    limit: int | None = None


@dataclass(frozen=True)
class QueryIssue:
    severity: str  # "error" | "warning"
    code: str  # SYNTAX | UNKNOWN_TABLE | UNKNOWN_COLUMN | TYPE | DML_FORBIDDEN
    message: str
    span: tuple[int, int] = (0, 0)

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "span": list(self.span),
        }


_PRECEDENCE = {
    "OR": 1,
    "AND": 2,
    "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6,
}


def print_expr(node, parent_prec: int = 0) -> str:
    if isinstance(node, Literal):
        v = node.value
        if isinstance(v, bool):
            return "TRUE" if v else "FALSE"
        if isinstance(v, str):
            return "'" + v.replace("'", "''") + "'"
        return repr(v)
    if isinstance(node, ColumnRef):
        return node.name
    if isinstance(node, Star):
        return "*"
    if isinstance(node, Aggregate):
        return f"{node.func.upper()}({print_expr(node.arg)})"
    if isinstance(node, UnaryOp):
        if node.op == "NOT":
            inner = print_expr(node.operand, 3)
            return f"NOT {inner}"
        return f"-{print_expr(node.operand, 7)}"
    if isinstance(node, BinaryOp):
        prec = _PRECEDENCE[node.op]
        left = print_expr(node.left, prec)
        right = print_expr(node.right, prec + 1)  # left-associative
        text = f"{left} {node.op} {right}"
        if prec < parent_prec:
            return f"({text})"
        return text
    raise TypeError(f"unknown expression node {node!r}")


def print_query(stmt: SelectStmt) -> str:
    parts = ["SELECT " + ", ".join(print_expr(p) for p in stmt.projections)]
    parts.append(f"FROM {stmt.table}")
    if stmt.where is not None:
        parts.append("WHERE " + print_expr(stmt.where))
    if stmt.group_by:
        parts.append("GROUP BY " + ", ".join(stmt.group_by))
    if stmt.order_by is not None:
        direction = "ASC" if stmt.order_by.ascending else "DESC"
        parts.append(f"ORDER BY {stmt.order_by.column} {direction}")
    if stmt.limit is not None:
        parts.append(f"LIMIT {stmt.limit}")
    return " ".join(parts)
