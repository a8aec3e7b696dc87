"""Input/output components: CSV and plain-text readers, CSV writer."""

from __future__ import annotations

import csv
from pathlib import Path

from ..errors import ComponentError
from ..frame import BOOLEAN, FLOAT64, INT64, UTF8, Column, ColumnRole, DType, Frame, FrameSchema
from ..stage import StagePhase
from . import ComponentSpec, ParamSpec, register

_HINTABLE = {"int64": INT64, "float64": FLOAT64, "boolean": BOOLEAN, "utf8": UTF8}


def _parse_cell(text: str, dtype: DType, row: int, col: str):
    if text == "":
        return "" if dtype.kind == "utf8" else None
    try:
        if dtype.kind == "int64":
            return int(text)
        if dtype.kind == "float64":
            return float(text)
        if dtype.kind == "boolean":
            low = text.lower()
            if low in ("true", "1"):
                return True
            if low in ("false", "0"):
                return False
            raise ValueError(text)
        return text
    except ValueError:
        raise ComponentError(
            f"row {row}: cannot parse {text!r} as {dtype} in column {col!r}"
        ) from None


def _infer_dtype(values: list[str]) -> DType:
    non_empty = [v for v in values if v != ""]
    if not non_empty:
        return UTF8
    try:
        for v in non_empty:
            int(v)
        return INT64
    except ValueError:
        pass
    try:
        for v in non_empty:
            float(v)
        return FLOAT64
    except ValueError:
        pass
    return UTF8


def read_frame(
    source: str,
    path: str,
    header: bool = True,
    delimiter: str = ",",
    dtypes: dict | None = None,
    label: str | None = None,
    features: list[str] | None = None,
) -> Frame:
    """Read a CSV or text file into a frame.

    CSV columns get inferred or hinted dtypes; the ``label`` / ``features``
    options set column roles. Text files become a single utf8 ``line`` column.
    """
    file_path = Path(path)
    if not file_path.exists():
        raise ComponentError(f"no such file: {path}")
    if source == "text":
        lines = file_path.read_text(encoding="utf-8").splitlines()
        return Frame(
            FrameSchema((Column("line", UTF8, ColumnRole.PLAIN),)),
            (tuple(lines),),
        )
    if source != "csv":
        raise ComponentError(f"unknown source {source!r} (expected csv or text)")

    with file_path.open(newline="", encoding="utf-8") as fh:
        records = list(csv.reader(fh, delimiter=delimiter))
    if not records:
        raise ComponentError(f"{path}: empty file")
    if header:
        names = records[0]
        body = records[1:]
    else:
        names = [f"c{i}" for i in range(len(records[0]))]
        body = records
    for i, rec in enumerate(body):
        if len(rec) != len(names):
            raise ComponentError(
                f"row {i + 1}: expected {len(names)} fields, got {len(rec)}"
            )

    hints = dtypes or {}
    for col in hints:
        if col not in names:
            raise ComponentError(f"dtype hint for unknown column {col!r}")
        if hints[col] not in _HINTABLE:
            raise ComponentError(f"unknown dtype hint {hints[col]!r} for column {col!r}")

    roles: dict[str, ColumnRole] = {}
    if label is not None:
        if label not in names:
            raise ComponentError(f"label column {label!r} not in file")
        roles[label] = ColumnRole.LABEL
    for feat in features or []:
        if feat not in names:
            raise ComponentError(f"feature column {feat!r} not in file")
        roles[feat] = ColumnRole.FEATURE

    cols, data = [], []
    for j, name in enumerate(names):
        raw = [rec[j] for rec in body]
        dtype = _HINTABLE[hints[name]] if name in hints else _infer_dtype(raw)
        values = tuple(_parse_cell(v, dtype, i + 1, name) for i, v in enumerate(raw))
        cols.append(Column(name, dtype, roles.get(name, ColumnRole.PLAIN)))
        data.append(values)
    return Frame(FrameSchema(tuple(cols)), tuple(data))


def _render_csv_cell(value, dtype: DType) -> str:
    if value is None:
        return ""
    if dtype.kind == "boolean":
        return "true" if value else "false"
    if dtype.kind == "float64":
        return repr(value)
    return str(value)


def _write_csv(frame: Frame, fh, vectors: str) -> int:
    if vectors not in ("error", "explode", "string"):
        raise ComponentError(f"unknown vectors mode {vectors!r}")
    header: list[str] = []
    getters = []
    for col, data in zip(frame.schema.columns, frame.columns):
        if col.dtype.kind != "vector":
            header.append(col.name)
            getters.append((data, col.dtype, None))
            continue
        if vectors == "error":
            raise ComponentError(
                f"vector column {col.name!r}: pass vectors=explode or vectors=string"
            )
        if vectors == "explode":
            for d in range(col.dtype.dim):
                header.append(f"{col.name}_{d}")
                getters.append((data, FLOAT64, d))
        else:
            header.append(col.name)
            getters.append((data, col.dtype, "string"))

    writer = csv.writer(fh)
    writer.writerow(header)
    for i in range(frame.row_count):
        row = []
        for data, dtype, mode in getters:
            v = data[i]
            if mode is None:
                row.append(_render_csv_cell(v, dtype))
            elif mode == "string":
                row.append("" if v is None else "[" + ", ".join(repr(x) for x in v) + "]")
            else:
                row.append("" if v is None else repr(v[mode]))
        writer.writerow(row)
    return frame.row_count


def write_frame(frame: Frame, path: str, fmt: str = "csv", vectors: str = "error") -> int:
    """Write a frame as CSV; returns the row count written.

    ``vectors`` controls vector columns: "error" rejects them, "explode"
    emits one column per dimension, "string" renders a bracketed list.
    """
    if fmt != "csv":
        raise ComponentError(f"unknown format {fmt!r}")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        return _write_csv(frame, fh, vectors)


def frame_to_csv_text(frame: Frame, vectors: str = "string") -> str:
    import io as _io

    buf = _io.StringIO(newline="")
    _write_csv(frame, buf, vectors)
    return buf.getvalue()


def generate_rows(rows: int) -> Frame:
    """Tiny synthetic source for stub flows: one feature column x = 0..rows-1."""
    if rows < 0:
        raise ComponentError("rows must be non-negative")
    return Frame(
        FrameSchema((Column("x", INT64, ColumnRole.FEATURE),)),
        (tuple(range(rows)),),
    )


# -- registrations -----------------------------------------------------------

register(
    ComponentSpec(
        kind="csv_read",
        phase=StagePhase.INPUT,
        params=(
            ParamSpec("path", "str", required=True),
            ParamSpec("header", "bool", default=True),
            ParamSpec("delimiter", "str", default=","),
            ParamSpec("dtypes", "map", doc="column name -> dtype hint"),
            ParamSpec("label", "str", doc="column to mark as the label"),
            ParamSpec("features", "list", doc="columns to mark as features"),
        ),
        in_ports=(),
        out_ports=("out",),
        doc="Read a delimited file into a frame with inferred or hinted dtypes.",
    ),
    lambda p, inputs: {
        "out": read_frame(
            "csv", p["path"], p["header"], p["delimiter"], p["dtypes"], p["label"], p["features"]
        )
    },
)

register(
    ComponentSpec(
        kind="text_read",
        phase=StagePhase.INPUT,
        params=(ParamSpec("path", "str", required=True),),
        in_ports=(),
        out_ports=("out",),
        doc="Read a text file into a single-column frame (one row per line).",
    ),
    lambda p, inputs: {"out": read_frame("text", p["path"])},
)

register(
    ComponentSpec(
        kind="gen_rows",
        phase=StagePhase.INPUT,
        params=(ParamSpec("rows", "int", required=True),),
        in_ports=(),
        out_ports=("out",),
        doc="Synthetic integer source used by stub and benchmark flows.",
    ),
    lambda p, inputs: {"out": generate_rows(p["rows"])},
)

register(
    ComponentSpec(
        kind="csv_write",
        phase=StagePhase.OUTPUT,
        params=(
            ParamSpec("path", "str", required=True),
            ParamSpec("vectors", "str", default="error"),
        ),
        in_ports=("in",),
        out_ports=("out",),
        doc="Write the input frame as CSV; passes the frame through unchanged.",
    ),
    lambda p, inputs: (
        write_frame(inputs["in"], p["path"], "csv", p["vectors"]),
        {"out": inputs["in"]},
    )[1],
)

register(
    ComponentSpec(
        kind="sink",
        phase=StagePhase.OUTPUT,
        params=(),
        in_ports=("in",),
        out_ports=("out",),
        doc="Terminal no-op; exposes its input as a result table.",
    ),
    lambda p, inputs: {"out": inputs["in"]},
)
