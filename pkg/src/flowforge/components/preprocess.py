"""Data preprocessing components: cleaning, filtering, type changes, join/fork."""

from __future__ import annotations

import math
import time

from ..errors import ComponentError, SqlError
from ..frame import Column, ColumnRole, DType, Frame, FrameSchema, vector
from ..minisql import eval_expr, infer_expr_type, parse_expression
from ..stage import StagePhase
from . import ComponentSpec, ParamSpec, register


def clean_rows(frame: Frame, policy: str, value=None, zmax: float = 3.0, columns: list[str] | None = None) -> Frame:
    """drop_null removes rows with nulls, fill replaces them, drop_outlier
    removes rows whose z-score (sample std) exceeds zmax on numeric columns."""
    target_names = columns if columns is not None else list(frame.schema.names)
    for name in target_names:
        frame.schema.column(name)  # raises on unknown
    targets = [frame.schema.index(n) for n in target_names]

    if policy == "drop_null":
        keep = [
            i
            for i in range(frame.row_count)
            if all(frame.columns[j][i] is not None for j in targets)
        ]
        return frame.select_rows(keep)

    if policy == "fill":
        if value is None:
            raise ComponentError("fill policy requires a value")
        data = list(frame.columns)
        for j in targets:
            col = frame.schema.columns[j]
            fill = value
            if col.dtype.kind == "float64" and isinstance(fill, int) and not isinstance(fill, bool):
                fill = float(fill)
            if not _cell_matches(fill, col.dtype):
                raise ComponentError(
                    f"fill value {value!r} does not match column {col.name!r} ({col.dtype})"
                )
            data[j] = tuple(fill if v is None else v for v in data[j])
        return Frame(frame.schema, tuple(data), frame.row_count)

    if policy == "drop_outlier":
        drop: set[int] = set()
        for j in targets:
            col = frame.schema.columns[j]
            if col.dtype.kind not in ("int64", "float64"):
                continue
            values = [(i, v) for i, v in enumerate(frame.columns[j]) if v is not None]
            if len(values) < 2:
                continue
            mean = sum(v for _, v in values) / len(values)
            var = sum((v - mean) ** 2 for _, v in values) / (len(values) - 1)
            std = math.sqrt(var)
            if std == 0.0:
                continue
            for i, v in values:
                if abs((v - mean) / std) > zmax:
                    drop.add(i)
        keep = [i for i in range(frame.row_count) if i not in drop]
        return frame.select_rows(keep)

    raise ComponentError(f"unknown clean policy {policy!r}")


def _cell_matches(value, dtype: DType) -> bool:
    if dtype.kind == "int64":
        return isinstance(value, int) and not isinstance(value, bool)
    if dtype.kind == "float64":
        return isinstance(value, float)
    if dtype.kind == "boolean":
        return isinstance(value, bool)
    if dtype.kind == "utf8":
        return isinstance(value, str)
    return False


def filter_rows(frame: Frame, predicate: str) -> Frame:
    """Keep rows where the boolean expression is true; order preserved."""
    expr = parse_expression(predicate)
    columns = {c.name: c.dtype for c in frame.schema.columns}
    dtype = infer_expr_type(expr, columns)
    if dtype.kind != "boolean":
        raise SqlError(f"filter predicate must be boolean, got {dtype}")
    keep = [i for i in range(frame.row_count) if eval_expr(expr, frame, i) is True]
    return frame.select_rows(keep)


_CASTS = {
    ("utf8", "int64"), ("utf8", "float64"), ("utf8", "boolean"),
    ("int64", "float64"), ("int64", "utf8"), ("int64", "boolean"),
    ("float64", "int64"), ("float64", "utf8"),
    ("boolean", "int64"), ("boolean", "utf8"),
}


def change_type(frame: Frame, column: str, to: DType) -> Frame:
    col = frame.schema.column(column)
    src = col.dtype
    if src == to:
        return frame
    if (src.kind, to.kind) not in _CASTS:
        raise ComponentError(f"no conversion from {src} to {to}")
    out = []
    for i, v in enumerate(frame.column(column)):
        if v is None:
            out.append(None)
            continue
        try:
            out.append(_convert(v, src, to))
        except (ValueError, ComponentError):
            raise ComponentError(
                f"row {i}: cannot convert {v!r} from {src} to {to}"
            ) from None
    return frame.with_column(column, to, col.role, out)


def _convert(v, src: DType, to: DType):
    if to.kind == "int64":
        if src.kind == "float64":
            if v != int(v):
                raise ValueError(v)
            return int(v)
        if src.kind == "boolean":
            return 1 if v else 0
        return int(v)
    if to.kind == "float64":
        return float(v)
    if to.kind == "boolean":
        if src.kind == "utf8":
            low = v.lower()
            if low in ("true", "1"):
                return True
            if low in ("false", "0"):
                return False
            raise ValueError(v)
        return bool(v)
    # utf8
    if src.kind == "boolean":
        return "true" if v else "false"
    if src.kind == "float64":
        return repr(v)
    return str(v)


def join_assemble(frames: list[Frame], output: str = "features") -> Frame:
    """Merge the feature-role columns of several equal-length frames into one
    float64 vector column; the first frame's label column (if any) is carried.

    Contributing columns are the feature-role columns of each input in port
    then schema order; scalars contribute width 1 and vectors their dim.
    """
    if not frames:
        raise ComponentError("join requires at least one input")
    rows = frames[0].row_count
    for k, f in enumerate(frames[1:], start=1):
        if f.row_count != rows:
            raise ComponentError(
                f"row count mismatch: input 0 has {rows}, input {k} has {f.row_count}"
            )
    contributors: list[tuple[Frame, Column]] = []
    for f in frames:
        for col in f.schema.columns:
            if col.role is not ColumnRole.FEATURE:
                continue
            if col.dtype.kind not in ("int64", "float64", "vector"):
                raise ComponentError(
                    f"non-numeric contributor {col.name!r} ({col.dtype})"
                )
            contributors.append((f, col))
    if not contributors:
        raise ComponentError("no feature-role columns to assemble")
    dim = sum(c.dtype.dim if c.dtype.kind == "vector" else 1 for _, c in contributors)

    vectors_out = []
    for i in range(rows):
        cell: list[float] = []
        for f, col in contributors:
            v = f.column(col.name)[i]
            if v is None:
                raise ComponentError(f"null feature value in {col.name!r} at row {i}")
            if col.dtype.kind == "vector":
                cell.extend(v)
            else:
                cell.append(float(v))
        vectors_out.append(tuple(cell))

    cols = [Column(output, vector(dim), ColumnRole.FEATURE)]
    data = [tuple(vectors_out)]
    label = frames[0].schema.label_column()
    if label is not None:
        cols.append(label)
        data.append(frames[0].column(label.name))
    return Frame(FrameSchema(tuple(cols)), tuple(data), rows)


def fork(handle, n: int) -> list:
    """Alias a stored frame across n branches with zero copies."""
    if n < 2:
        raise ComponentError("fork requires n >= 2")
    return [handle] * n


def delay_frame(frame: Frame, ms_per_row: float = 0.0, fixed_ms: float = 0.0) -> Frame:
    """Identity pass-through with calibrated cost; used by stub/bench flows."""
    duration = (fixed_ms + ms_per_row * frame.row_count) / 1000.0
    if duration > 0:
        time.sleep(duration)
    return frame


# -- registrations -----------------------------------------------------------

register(
    ComponentSpec(
        kind="clean_rows",
        phase=StagePhase.PREPROCESS,
        params=(
            ParamSpec("policy", "str", required=True, doc="drop_null | fill | drop_outlier"),
            ParamSpec("value", "scalar", doc="replacement for fill"),
            ParamSpec("zmax", "float", default=3.0),
            ParamSpec("columns", "list", doc="target columns (default: all)"),
        ),
        in_ports=("in",),
        out_ports=("out",),
        doc="Clean null or outlier rows, or fill nulls with a constant.",
    ),
    lambda p, inputs: {
        "out": clean_rows(inputs["in"], p["policy"], p["value"], p["zmax"], p["columns"])
    },
)

register(
    ComponentSpec(
        kind="filter_rows",
        phase=StagePhase.PREPROCESS,
        params=(ParamSpec("predicate", "str", required=True),),
        in_ports=("in",),
        out_ports=("out",),
        doc="Keep rows satisfying a boolean expression.",
    ),
    lambda p, inputs: {"out": filter_rows(inputs["in"], p["predicate"])},
)

register(
    ComponentSpec(
        kind="change_type",
        phase=StagePhase.PREPROCESS,
        params=(
            ParamSpec("column", "str", required=True),
            ParamSpec("to", "str", required=True, doc="target dtype name"),
        ),
        in_ports=("in",),
        out_ports=("out",),
        doc="Convert a column to another dtype.",
    ),
    lambda p, inputs: {
        "out": change_type(inputs["in"], p["column"], DType.parse(p["to"]))
    },
)

register(
    ComponentSpec(
        kind="join",
        phase=StagePhase.PREPROCESS,
        params=(
            ParamSpec("arity", "int", default=2),
            ParamSpec("output", "str", default="features"),
        ),
        in_ports=("in0", "in1"),
        out_ports=("out",),
        variadic_in=True,
        doc="Assemble feature columns from several inputs into one vector.",
    ),
    lambda p, inputs: {
        "out": join_assemble(
            [inputs[f"in{i}"] for i in range(p["arity"])], p["output"]
        )
    },
)

register(
    ComponentSpec(
        kind="fork",
        phase=StagePhase.PREPROCESS,
        params=(ParamSpec("ways", "int", default=2),),
        in_ports=("in",),
        out_ports=("out0", "out1"),
        variadic_out=True,
        doc="Feed the same frame to several branches without copying.",
    ),
    lambda p, inputs: {f"out{i}": inputs["in"] for i in range(p["ways"])},
)

register(
    ComponentSpec(
        kind="delay",
        phase=StagePhase.PREPROCESS,
        params=(
            ParamSpec("ms_per_row", "float", default=0.0),
            ParamSpec("fixed_ms", "float", default=0.0),
        ),
        in_ports=("in",),
        out_ports=("out",),
        doc="Pass-through with calibrated cost; for stub and benchmark flows.",
    ),
    lambda p, inputs: {"out": delay_frame(inputs["in"], p["ms_per_row"], p["fixed_ms"])},
)
