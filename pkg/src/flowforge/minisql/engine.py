"""Static checking and evaluation of parsed queries against a catalog.

A catalog is any mapping of table name -> Frame. The engine is strictly
read-only: queries never mutate frames, and ``catalog_fingerprint`` gives
tests a cheap way to assert that.

Null handling: a bare column may yield None; feeding None into an operator
is an evaluation error (clean the data first), while aggregates skip None
inputs. sum/avg/min/max over zero non-null values make the group undefined,
so that result row is absent; count of nothing is 0.
"""

from __future__ import annotations

import hashlib
from typing import Mapping

from ..errors import SqlError
from ..frame import BOOLEAN, FLOAT64, INT64, UTF8, Column, DType, Frame, FrameSchema, encode_frame
from .ast import (
    Aggregate,
    BinaryOp,
    ColumnRef,
    Literal,
    QueryIssue,
    SelectStmt,
    Star,
    UnaryOp,
)
from .parser import parse_sql

DEFAULT_TOP_K = 10

_NUMERIC = ("int64", "float64")
_COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


class _TypeChecker:
    def __init__(self, columns: Mapping[str, DType]):
        self.columns = columns
        self.issues: list[QueryIssue] = []

    def error(self, code: str, message: str):
        self.issues.append(QueryIssue("error", code, message))

    def infer(self, node) -> DType | None:
        if isinstance(node, Literal):
            v = node.value
            if isinstance(v, bool):
                return BOOLEAN
            if isinstance(v, int):
                return INT64
            if isinstance(v, float):
                return FLOAT64
            return UTF8
        if isinstance(node, ColumnRef):
            dtype = self.columns.get(node.name)
            if dtype is None:
                self.error("UNKNOWN_COLUMN", f"unknown column {node.name!r}")
                return None
            return dtype
        if isinstance(node, UnaryOp):
            inner = self.infer(node.operand)
            if inner is None:
                return None
            if node.op == "NOT":
                if inner.kind != "boolean":
                    self.error("TYPE", f"NOT requires boolean, got {inner}")
                    return None
                return BOOLEAN
            if inner.kind not in _NUMERIC:
                self.error("TYPE", f"unary - requires a number, got {inner}")
                return None
            return inner
        if isinstance(node, BinaryOp):
            left = self.infer(node.left)
            right = self.infer(node.right)
            if left is None or right is None:
                return None
            op = node.op
            if op in ("AND", "OR"):
                if left.kind != "boolean" or right.kind != "boolean":
                    self.error("TYPE", f"{op} requires booleans, got {left} and {right}")
                    return None
                return BOOLEAN
            if op in _COMPARISONS:
                if left.kind in _NUMERIC and right.kind in _NUMERIC:
                    return BOOLEAN
                if left.kind == right.kind and left.kind in ("utf8", "boolean"):
                    if left.kind == "boolean" and op not in ("=", "!="):
                        self.error("TYPE", f"{op} not defined on booleans")
                        return None
                    return BOOLEAN
                self.error("TYPE", f"cannot compare {left} with {right}")
                return None
            # arithmetic
            if left.kind not in _NUMERIC or right.kind not in _NUMERIC:
                self.error("TYPE", f"{op} requires numbers, got {left} and {right}")
                return None
            if op == "/":
                return FLOAT64
            if left.kind == "float64" or right.kind == "float64":
                return FLOAT64
            return INT64
        if isinstance(node, Aggregate):
            return self.infer_aggregate(node)
        if isinstance(node, Star):
            self.error("TYPE", "* is not valid inside an expression")
            return None
        raise TypeError(f"unknown node {node!r}")

    def infer_aggregate(self, node: Aggregate) -> DType | None:
        if isinstance(node.arg, Star):
            if node.func != "count":
                self.error("TYPE", f"{node.func.upper()}(*) is not defined")
                return None
            return INT64
        arg = self.infer(node.arg)
        if arg is None:
            return None
        if node.func == "count":
            return INT64
        if node.func in ("sum", "avg"):
            if arg.kind not in _NUMERIC:
                self.error("TYPE", f"{node.func.upper()} requires a number, got {arg}")
                return None
            return FLOAT64 if node.func == "avg" else arg
        # min / max: numbers or strings
        if arg.kind not in ("int64", "float64", "utf8"):
            self.error("TYPE", f"{node.func.upper()} not defined on {arg}")
            return None
        return arg


def infer_expr_type(node, columns: Mapping[str, DType]) -> DType:
    """Type of a row expression, raising SqlError on any issue."""
    checker = _TypeChecker(columns)
    dtype = checker.infer(node)
    if checker.issues:
        raise SqlError(checker.issues[0].message, checker.issues)
    assert dtype is not None
    return dtype


def _has_aggregate(node) -> bool:
    if isinstance(node, Aggregate):
        return True
    if isinstance(node, UnaryOp):
        return _has_aggregate(node.operand)
    if isinstance(node, BinaryOp):
        return _has_aggregate(node.left) or _has_aggregate(node.right)
    return False


def _output_names(stmt: SelectStmt, source_names: tuple[str, ...]) -> list[str]:
    """Deterministic result column names; collisions get _2, _3 suffixes."""
    raw: list[str] = []
    for proj in stmt.projections:
        if isinstance(proj, Star):
            raw.extend(source_names)
        elif isinstance(proj, ColumnRef):
            raw.append(proj.name)
        elif isinstance(proj, Aggregate):
            if isinstance(proj.arg, ColumnRef):
                raw.append(f"{proj.func}_{proj.arg.name}")
            else:
                raw.append(proj.func)
        else:
            raw.append(f"expr_{len(raw)}")
    names: list[str] = []
    for name in raw:
        if name not in names:
            names.append(name)
            continue
        k = 2
        while f"{name}_{k}" in names:
            k += 1
        names.append(f"{name}_{k}")
    return names


def check_query(text: str, catalog: Mapping[str, Frame]) -> list[QueryIssue]:
    """Run every static check; issues are data, not exceptions."""
    try:
        stmt = parse_sql(text)
    except SqlError as exc:
        return list(exc.issues)
    issues: list[QueryIssue] = []
    frame = catalog.get(stmt.table)
    if frame is None:
        issues.append(QueryIssue("error", "UNKNOWN_TABLE", f"unknown table {stmt.table!r}"))
        return issues
    columns = {c.name: c.dtype for c in frame.schema.columns}
    checker = _TypeChecker(columns)

    grouped = bool(stmt.group_by)
    has_any_aggregate = any(_has_aggregate(p) for p in stmt.projections if not isinstance(p, Star))
    for col in stmt.group_by:
        if col not in columns:
            checker.error("UNKNOWN_COLUMN", f"unknown column {col!r} in GROUP BY")

    for proj in stmt.projections:
        if isinstance(proj, Star):
            if grouped or has_any_aggregate:
                checker.error("TYPE", "* cannot be mixed with aggregates or GROUP BY")
            continue
        if grouped:
            if isinstance(proj, ColumnRef):
                if proj.name in columns and proj.name not in stmt.group_by:
                    checker.error(
                        "TYPE",
                        f"column {proj.name!r} must appear in GROUP BY or an aggregate",
                    )
                checker.infer(proj)
            elif isinstance(proj, Aggregate):
                checker.infer(proj)
            else:
                checker.error("TYPE", "grouped projections must be group columns or aggregates")
        else:
            if has_any_aggregate and not isinstance(proj, Aggregate):
                checker.error("TYPE", "aggregates and bare columns mix only under GROUP BY")
            else:
                checker.infer(proj)
        if isinstance(proj, ColumnRef) and proj.name in columns:
            if columns[proj.name].kind == "vector" and (grouped or has_any_aggregate):
                checker.error("TYPE", f"vector column {proj.name!r} cannot be aggregated")

    if stmt.where is not None:
        if _has_aggregate(stmt.where):
            checker.error("TYPE", "aggregates are not allowed in WHERE")
        else:
            where_type = checker.infer(stmt.where)
            if where_type is not None and where_type.kind != "boolean":
                checker.error("TYPE", f"WHERE must be boolean, got {where_type}")

    out_names = _output_names(stmt, frame.schema.names)
    if stmt.order_by is not None and stmt.order_by.column not in out_names:
        checker.error(
            "UNKNOWN_COLUMN",
            f"ORDER BY column {stmt.order_by.column!r} is not in the result",
        )
    issues.extend(checker.issues)
    return issues


# -- evaluation -------------------------------------------------------------

def eval_expr(node, frame: Frame, row: int):
    """Evaluate a row expression against frame row ``row``."""
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, ColumnRef):
        return frame.column(node.name)[row]
    if isinstance(node, UnaryOp):
        v = eval_expr(node.operand, frame, row)
        if v is None:
            raise SqlError(f"null value in expression at row {row}")
        return (not v) if node.op == "NOT" else -v
    if isinstance(node, BinaryOp):
        left = eval_expr(node.left, frame, row)
        op = node.op
        if op == "AND":
            if left is None:
                raise SqlError(f"null value in expression at row {row}")
            if not left:
                return False
            right = eval_expr(node.right, frame, row)
            if right is None:
                raise SqlError(f"null value in expression at row {row}")
            return bool(right)
        if op == "OR":
            if left is None:
                raise SqlError(f"null value in expression at row {row}")
            if left:
                return True
            right = eval_expr(node.right, frame, row)
            if right is None:
                raise SqlError(f"null value in expression at row {row}")
            return bool(right)
        right = eval_expr(node.right, frame, row)
        if left is None or right is None:
            raise SqlError(f"null value in expression at row {row}")
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "/":
            if right == 0:
                raise SqlError(f"division by zero at row {row}")
            return float(left) / float(right)
        if op == "=":
            return left == right
        if op == "!=":
            return left != right
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
    raise TypeError(f"cannot evaluate {node!r}")


def _aggregate_value(agg: Aggregate, frame: Frame, rows: list[int]):
    """Returns (value, defined). count is always defined; the rest skip None
    inputs and are undefined over zero values."""
    if isinstance(agg.arg, Star):
        return len(rows), True
    values = []
    for r in rows:
        v = eval_expr(agg.arg, frame, r)
        if v is not None:
            values.append(v)
    if agg.func == "count":
        return len(values), True
    if not values:
        return None, False
    if agg.func == "sum":
        total = sum(values)
        return total, True
    if agg.func == "avg":
        return float(sum(values)) / len(values), True
    if agg.func == "min":
        return min(values), True
    return max(values), True


def execute_query(stmt: SelectStmt, catalog: Mapping[str, Frame], top_k: int = DEFAULT_TOP_K) -> Frame:
    """Relational evaluation: filter, group, aggregate, order, limit."""
    frame = catalog.get(stmt.table)
    if frame is None:
        raise SqlError(
            f"unknown table {stmt.table!r}",
            [QueryIssue("error", "UNKNOWN_TABLE", f"unknown table {stmt.table!r}")],
        )
    columns = {c.name: c.dtype for c in frame.schema.columns}
    checker = _TypeChecker(columns)

    rows = list(range(frame.row_count))
    if stmt.where is not None:
        rows = [r for r in rows if eval_expr(stmt.where, frame, r) is True]

    grouped = bool(stmt.group_by)
    has_aggregates = any(_has_aggregate(p) for p in stmt.projections if not isinstance(p, Star))
    out_names = _output_names(stmt, frame.schema.names)

    out_cols: list[Column] = []
    out_data: list[list] = []

    def _projection_dtype(proj) -> DType:
        dtype = checker.infer(proj)
        if dtype is None:
            raise SqlError(checker.issues[-1].message, checker.issues)
        return dtype

    if grouped or has_aggregates:
        if grouped:
            group_order: list[tuple] = []
            groups: dict[tuple, list[int]] = {}
            for r in rows:
                key = tuple(frame.column(c)[r] for c in stmt.group_by)
                if key not in groups:
                    groups[key] = []
                    group_order.append(key)
                groups[key].append(r)
            buckets = [(key, groups[key]) for key in group_order]
        else:
            buckets = [((), rows)]

        result_rows: list[list] = []
        for key, members in buckets:
            record = []
            defined = True
            for proj in stmt.projections:
                if isinstance(proj, ColumnRef):
                    record.append(frame.column(proj.name)[members[0]] if members else None)
                elif isinstance(proj, Aggregate):
                    value, ok = _aggregate_value(proj, frame, members)
                    if not ok:
                        defined = False
                        break
                    record.append(value)
                else:
                    raise SqlError("grouped projections must be group columns or aggregates")
            if defined and (members or not grouped):
                if not grouped and not members:
                    # implicit single group over zero rows: only counts survive
                    if all(isinstance(p, Aggregate) and p.func == "count" for p in stmt.projections):
                        result_rows.append(record)
                else:
                    result_rows.append(record)

        name_iter = iter(out_names)
        for proj in stmt.projections:
            out_cols.append(Column(next(name_iter), _projection_dtype(proj)))
        out_data = [[row[i] for row in result_rows] for i in range(len(out_cols))]
    else:
        name_iter = iter(out_names)
        for proj in stmt.projections:
            if isinstance(proj, Star):
                for col in frame.schema.columns:
                    out_cols.append(Column(next(name_iter), col.dtype, col.role))
                    out_data.append([frame.column(col.name)[r] for r in rows])
            else:
                dtype = _projection_dtype(proj)
                out_cols.append(Column(next(name_iter), dtype))
                out_data.append([eval_expr(proj, frame, r) for r in rows])
        # int literals projected into float64 slots stay ints from eval; coerce
        for i, col in enumerate(out_cols):
            if col.dtype.kind == "float64":
                out_data[i] = [float(v) if isinstance(v, int) else v for v in out_data[i]]

    if grouped or has_aggregates:
        for i, col in enumerate(out_cols):
            if col.dtype.kind == "float64":
                out_data[i] = [float(v) if isinstance(v, int) else v for v in out_data[i]]

    if stmt.order_by is not None:
        idx = [c.name for c in out_cols].index(stmt.order_by.column)
        order = _stable_order(out_data[idx], stmt.order_by.ascending)
        out_data = [[col[i] for i in order] for col in out_data]

    cap = top_k if stmt.limit is None else min(stmt.limit, top_k)
    out_data = [col[:cap] for col in out_data]

    return Frame(FrameSchema(tuple(out_cols)), tuple(tuple(c) for c in out_data))


def _stable_order(keys: list, ascending: bool) -> list[int]:
    # None sorts before everything ascending, after everything descending;
    # ties keep input order (stable) in both directions.
    present = [i for i in range(len(keys)) if keys[i] is not None]
    absent = [i for i in range(len(keys)) if keys[i] is None]
    ordered = sorted(present, key=lambda i: keys[i], reverse=not ascending)
    return absent + ordered if ascending else ordered + absent


def run_query(text: str, catalog: Mapping[str, Frame], top_k: int = DEFAULT_TOP_K) -> Frame:
    """check_query then execute_query; static issues raise SqlError."""
    issues = [i for i in check_query(text, catalog) if i.severity == "error"]
    if issues:
        raise SqlError("; ".join(i.message for i in issues), issues)
    return execute_query(parse_sql(text), catalog, top_k)


# -- catalog tools ----------------------------------------------------------

def list_tables(catalog: Mapping[str, Frame]) -> list[str]:
    return sorted(catalog.keys())


def table_info(catalog: Mapping[str, Frame], name: str, sample_rows: int = 3) -> str:
    frame = catalog.get(name)
    if frame is None:
        raise SqlError(
            f"unknown table {name!r}",
            [QueryIssue("error", "UNKNOWN_TABLE", f"unknown table {name!r}")],
        )
    lines = [f"table {name} ({frame.row_count} rows)"]
    for col in frame.schema.columns:
        lines.append(f"  {col.name} {col.dtype} {col.role.value}")
    lines.append("sample rows:")
    shown = min(sample_rows, frame.row_count)
    for r in range(shown):
        cells = []
        for col, data in zip(frame.schema.columns, frame.columns):
            v = data[r]
            cells.append(f"{col.name}={v!r}")
        lines.append("  " + " ".join(cells))
    if shown == 0:
        lines.append("  (empty)")
    return "\n".join(lines)


def render_result(frame: Frame) -> str:
    """Plain-text rendering of a result frame for agent observations."""
    header = " | ".join(frame.schema.names)
    lines = [header]
    for row in frame.rows():
        lines.append(" | ".join(_render_cell(row[n]) for n in frame.schema.names))
    return "\n".join(lines)


def _render_cell(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return "[" + ", ".join(repr(x) for x in v) + "]"
    return str(v)


def catalog_fingerprint(catalog: Mapping[str, Frame]) -> str:
    digest = hashlib.sha256()
    for name in sorted(catalog.keys()):
        digest.update(name.encode("utf-8"))
        digest.update(encode_frame(catalog[name]))
    return digest.hexdigest()
