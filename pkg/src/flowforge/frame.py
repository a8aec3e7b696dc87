"""Immutable columnar frames: the table format exchanged between components.

A frame is a schema plus per-column value tuples. Columns carry a role
(feature / label / plain) so downstream components can locate engineered
features and the training label without positional conventions. Cells may be
None (null); cleaning components deal with those explicitly.

``encode_frame`` / ``decode_frame`` implement the binary spill format used by
the store and by byte-identity checks (see docs/formats.md).
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import SchemaError

_IDENT_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")

SPILL_MAGIC = b"FFRM"
SPILL_VERSION = 1


def is_identifier(name: str) -> bool:
    if not name or name[0].isdigit():
        return False
    return all(ch in _IDENT_OK for ch in name)


@dataclass(frozen=True)
class DType:
    """Column type: fixed scalar kinds plus fixed-width float64 vectors."""

    kind: str  # int64 | float64 | boolean | utf8 | vector
    dim: int | None = None

    def __post_init__(self):
        if self.kind not in ("int64", "float64", "boolean", "utf8", "vector"):
            raise SchemaError(f"unknown dtype kind {self.kind!r}")
        if self.kind == "vector":
            if not isinstance(self.dim, int) or self.dim < 1:
                raise SchemaError("vector dtype requires dim >= 1")
        elif self.dim is not None:
            raise SchemaError(f"dtype {self.kind} does not take a dim")

    def __str__(self) -> str:
        if self.kind == "vector":
            return f"vector<{self.dim}>"
        return self.kind

    @staticmethod
    def parse(text: str) -> "DType":
        if text.startswith("vector<") and text.endswith(">"):
            return DType("vector", int(text[7:-1]))
        return DType(text)


INT64 = DType("int64")
FLOAT64 = DType("float64")
BOOLEAN = DType("boolean")
UTF8 = DType("utf8")


def vector(dim: int) -> DType:
    return DType("vector", dim)


class ColumnRole(enum.Enum):
    FEATURE = "feature"
    LABEL = "label"
    PLAIN = "plain"


@dataclass(frozen=True)
class Column:
    name: str
    dtype: DType
    role: ColumnRole = ColumnRole.PLAIN


@dataclass(frozen=True)
class FrameSchema:
    """Ordered column descriptors; names unique, at most one label."""

    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate column names: {dupes}")
        for name in names:
            if not is_identifier(name):
                raise SchemaError(f"column name {name!r} is not a valid identifier")
        labels = [c.name for c in self.columns if c.role is ColumnRole.LABEL]
        if len(labels) > 1:
            raise SchemaError(f"more than one label column: {labels}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"no column named {name!r}")

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise SchemaError(f"no column named {name!r}")

    def label_column(self) -> Column | None:
        for c in self.columns:
            if c.role is ColumnRole.LABEL:
                return c
        return None


def _check_cell(value, dtype: DType, col: str, row: int):
    if value is None:
        return
    k = dtype.kind
    if k == "int64":
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError(f"column {col!r} row {row}: expected int64, got {value!r}")
    elif k == "float64":
        if not isinstance(value, float):
            raise SchemaError(f"column {col!r} row {row}: expected float64, got {value!r}")
    elif k == "boolean":
        if not isinstance(value, bool):
            raise SchemaError(f"column {col!r} row {row}: expected boolean, got {value!r}")
    elif k == "utf8":
        if not isinstance(value, str):
            raise SchemaError(f"column {col!r} row {row}: expected utf8, got {value!r}")
    else:  # vector
        if not isinstance(value, tuple) or len(value) != dtype.dim:
            raise SchemaError(
                f"column {col!r} row {row}: expected vector of dim {dtype.dim}, got {value!r}"
            )
        for x in value:
            if not isinstance(x, float):
                raise SchemaError(f"column {col!r} row {row}: vector cell {x!r} is not float")


class Frame:
    """Immutable columnar table. Columns are tuples; cells may be None."""

    __slots__ = ("schema", "columns", "row_count")

    def __init__(self, schema: FrameSchema, columns: Sequence[Sequence], row_count: int | None = None):
        if len(columns) != len(schema.columns):
            raise SchemaError(
                f"schema has {len(schema.columns)} columns, data has {len(columns)}"
            )
        cols = tuple(tuple(c) for c in columns)
        rows = row_count if row_count is not None else (len(cols[0]) if cols else 0)
        for col, data in zip(schema.columns, cols):
            if len(data) != rows:
                raise SchemaError(
                    f"column {col.name!r} has {len(data)} cells, expected {rows}"
                )
            for i, v in enumerate(data):
                _check_cell(v, col.dtype, col.name, i)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "row_count", rows)

    def __setattr__(self, name, value):
        raise AttributeError("Frame is immutable")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.row_count == other.row_count
            and self.columns == other.columns
        )

    def __repr__(self) -> str:
        cols = ", ".join(f"{c.name}:{c.dtype}" for c in self.schema.columns)
        return f"Frame({self.row_count} rows, [{cols}])"

    @classmethod
    def from_columns(cls, specs: Iterable[tuple]) -> "Frame":
        """Build from ``(name, dtype, role, values)`` tuples with light coercion.

        Ints are coerced to float for float64 columns; lists to tuples for
        vector columns.
        """
        cols, data = [], []
        for name, dtype, role, values in specs:
            coerced = []
            for v in values:
                if v is None:
                    coerced.append(None)
                elif dtype.kind == "float64" and isinstance(v, int) and not isinstance(v, bool):
                    coerced.append(float(v))
                elif dtype.kind == "vector":
                    coerced.append(tuple(float(x) for x in v))
                else:
                    coerced.append(v)
            cols.append(Column(name, dtype, role))
            data.append(tuple(coerced))
        return cls(FrameSchema(tuple(cols)), data)

    def column(self, name: str) -> tuple:
        return self.columns[self.schema.index(name)]

    def with_column(self, name: str, dtype: DType, role: ColumnRole, values: Sequence) -> "Frame":
        """New frame with ``name`` appended, or replaced in place if present."""
        names = self.schema.names
        new_col = Column(name, dtype, role)
        if name in names:
            idx = self.schema.index(name)
            cols = tuple(
                new_col if i == idx else c for i, c in enumerate(self.schema.columns)
            )
            data = tuple(
                tuple(values) if i == idx else d for i, d in enumerate(self.columns)
            )
        else:
            cols = self.schema.columns + (new_col,)
            data = self.columns + (tuple(values),)
        return Frame(FrameSchema(cols), data, self.row_count)

    def select_rows(self, indices: Sequence[int]) -> "Frame":
        data = tuple(tuple(col[i] for i in indices) for col in self.columns)
        return Frame(self.schema, data, len(indices))

    def rows(self) -> list[dict]:
        names = self.schema.names
        return [
            {n: self.columns[j][i] for j, n in enumerate(names)}
            for i in range(self.row_count)
        ]


# -- size accounting ------------------------------------------------------
# int64/float64 = 8 B/cell, boolean = 1 B/cell, utf8 = content bytes + 4 B,
# vector = 8*dim B/cell. Nulls occupy the fixed width (utf8 null = 4 B).
# Schema overhead is ignored. Deterministic by construction.

def frame_size_bytes(frame: Frame) -> int:
    total = 0
    for col, data in zip(frame.schema.columns, frame.columns):
        k = col.dtype.kind
        if k in ("int64", "float64"):
            total += 8 * frame.row_count
        elif k == "boolean":
            total += 1 * frame.row_count
        elif k == "vector":
            total += 8 * col.dtype.dim * frame.row_count
        else:  # utf8
            for v in data:
                total += 4 + (len(v.encode("utf-8")) if v is not None else 0)
    return total


# -- binary spill codec ----------------------------------------------------

def _schema_descriptor(frame: Frame) -> bytes:
    desc = {
        "rows": frame.row_count,
        "columns": [
            {"name": c.name, "dtype": str(c.dtype), "role": c.role.value}
            for c in frame.schema.columns
        ],
    }
    return json.dumps(desc, separators=(",", ":"), sort_keys=True).encode("utf-8")


def _null_bitmap(data: tuple) -> bytes:
    bits = bytearray((len(data) + 7) // 8)
    for i, v in enumerate(data):
        if v is None:
            bits[i // 8] |= 1 << (i % 8)
    return bytes(bits)


def _encode_column(col: Column, data: tuple) -> bytes:
    out = bytearray(_null_bitmap(data))
    k = col.dtype.kind
    if k == "int64":
        for v in data:
            out += struct.pack("<q", 0 if v is None else v)
    elif k == "float64":
        for v in data:
            out += struct.pack("<d", 0.0 if v is None else v)
    elif k == "boolean":
        for v in data:
            out += struct.pack("<B", 1 if v else 0)
    elif k == "utf8":
        for v in data:
            raw = b"" if v is None else v.encode("utf-8")
            out += struct.pack("<I", len(raw)) + raw
    else:  # vector
        zero = (0.0,) * col.dtype.dim
        for v in data:
            out += struct.pack(f"<{col.dtype.dim}d", *(zero if v is None else v))
    return bytes(out)


def encode_frame(frame: Frame) -> bytes:
    desc = _schema_descriptor(frame)
    parts = [SPILL_MAGIC, struct.pack("<I", SPILL_VERSION), struct.pack("<I", len(desc)), desc]
    for col, data in zip(frame.schema.columns, frame.columns):
        payload = _encode_column(col, data)
        parts.append(struct.pack("<I", len(payload)))
        parts.append(payload)
    return b"".join(parts)


def decode_frame(raw: bytes) -> Frame:
    if raw[:4] != SPILL_MAGIC:
        raise SchemaError("bad frame magic")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != SPILL_VERSION:
        raise SchemaError(f"unsupported frame version {version}")
    (desc_len,) = struct.unpack_from("<I", raw, 8)
    desc = json.loads(raw[12 : 12 + desc_len].decode("utf-8"))
    rows = desc["rows"]
    cols = tuple(
        Column(c["name"], DType.parse(c["dtype"]), ColumnRole(c["role"]))
        for c in desc["columns"]
    )
    offset = 12 + desc_len
    data = []
    for col in cols:
        (payload_len,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        payload = raw[offset : offset + payload_len]
        offset += payload_len
        data.append(_decode_column(col, payload, rows))
    return Frame(FrameSchema(cols), tuple(data), rows)


def _decode_column(col: Column, payload: bytes, rows: int) -> tuple:
    bitmap_len = (rows + 7) // 8
    bitmap = payload[:bitmap_len]
    body = payload[bitmap_len:]
    is_null = lambda i: bool(bitmap[i // 8] & (1 << (i % 8)))  # noqa: E731
    k = col.dtype.kind
    values: list = []
    if k == "int64":
        for i in range(rows):
            (v,) = struct.unpack_from("<q", body, 8 * i)
            values.append(None if is_null(i) else v)
    elif k == "float64":
        for i in range(rows):
            (v,) = struct.unpack_from("<d", body, 8 * i)
            values.append(None if is_null(i) else v)
    elif k == "boolean":
        for i in range(rows):
            values.append(None if is_null(i) else bool(body[i]))
    elif k == "utf8":
        pos = 0
        for i in range(rows):
            (n,) = struct.unpack_from("<I", body, pos)
            pos += 4
            raw_v = body[pos : pos + n]
            pos += n
            values.append(None if is_null(i) else raw_v.decode("utf-8"))
    else:  # vector
        width = 8 * col.dtype.dim
        for i in range(rows):
            v = struct.unpack_from(f"<{col.dtype.dim}d", body, width * i)
            values.append(None if is_null(i) else tuple(v))
    return tuple(values)
