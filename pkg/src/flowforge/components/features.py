"""Feature processing: scaling, text vectorization, selection, PCA, UDFs.

Stateful transforms return the transformed frame together with a
fitted-transformer artifact so the same mapping can be replayed on held-out
data via ``apply_transformer``.

Token lists are stored as utf8 cells joined with the unit separator (0x1f);
``tf_idf`` is the only consumer of that encoding.
"""

from __future__ import annotations

import math
import re

import numpy as np

from ..errors import ComponentError
from ..frame import UTF8, ColumnRole, Frame, vector
from ..minisql import eval_expr, infer_expr_type, parse_expression
from ..numerics import jacobi_eigen
from ..stage import StagePhase
from . import ComponentSpec, ParamSpec, register
from .models import ModelArtifact

TOKEN_SEP = "\x1f"


def _vector_matrix(frame: Frame, column: str) -> np.ndarray:
    col = frame.schema.column(column)
    if col.dtype.kind != "vector":
        raise ComponentError(f"column {column!r} is not a vector column ({col.dtype})")
    cells = frame.column(column)
    if any(v is None for v in cells):
        raise ComponentError(f"column {column!r} contains nulls")
    return np.array(cells, dtype=float).reshape(frame.row_count, col.dtype.dim)


def _with_vectors(frame: Frame, name: str, matrix: np.ndarray) -> Frame:
    cells = tuple(tuple(float(x) for x in row) for row in matrix)
    return frame.with_column(name, vector(matrix.shape[1]), ColumnRole.FEATURE, cells)


# -- scaling ------------------------------------------------------------------

def scale_columns(frame: Frame, method: str, column: str) -> tuple[Frame, ModelArtifact]:
    """normalizer: per-row L2 unit norm; standard: (x-mean)/std with sample
    std; minmax: (x-min)/(max-min). Degenerate dimensions map to 0.0."""
    if frame.row_count == 0:
        raise ComponentError("cannot scale an empty frame")
    x = _vector_matrix(frame, column)
    if method == "normalizer":
        norms = np.linalg.norm(x, axis=1)
        out = np.where(norms[:, None] > 0, x / np.where(norms == 0, 1.0, norms)[:, None], 0.0)
        stats = {}
    elif method == "standard":
        mean = x.mean(axis=0)
        std = x.std(axis=0, ddof=1) if x.shape[0] > 1 else np.zeros(x.shape[1])
        out = np.where(std > 0, (x - mean) / np.where(std == 0, 1.0, std), 0.0)
        stats = {"mean": mean.tolist(), "std": std.tolist()}
    elif method == "minmax":
        lo = x.min(axis=0)
        hi = x.max(axis=0)
        span = hi - lo
        out = np.where(span > 0, (x - lo) / np.where(span == 0, 1.0, span), 0.0)
        stats = {"min": lo.tolist(), "max": hi.tolist()}
    else:
        raise ComponentError(f"unknown scaling method {method!r}")
    artifact = ModelArtifact(
        kind="fitted-transformer",
        payload={"transform": "scaler", "method": method, "column": column, "stats": stats},
        feature_dim=x.shape[1],
        classes=[],
    )
    return _with_vectors(frame, column, out), artifact


# -- text ---------------------------------------------------------------------

def tokenize(frame: Frame, column: str, output: str, lowercase: bool = True, pattern: str = r"\s+") -> Frame:
    col = frame.schema.column(column)
    if col.dtype.kind != "utf8":
        raise ComponentError(f"tokenize requires a utf8 column, got {col.dtype}")
    try:
        splitter = re.compile(pattern)
    except re.error as exc:
        raise ComponentError(f"bad token pattern {pattern!r}: {exc}") from None
    out = []
    for v in frame.column(column):
        if v is None:
            out.append(None)
            continue
        text = v.lower() if lowercase else v
        tokens = [t for t in splitter.split(text) if t]
        out.append(TOKEN_SEP.join(tokens))
    return frame.with_column(output, UTF8, ColumnRole.PLAIN, out)


def _token_lists(frame: Frame, column: str) -> list[list[str]]:
    col = frame.schema.column(column)
    if col.dtype.kind != "utf8":
        raise ComponentError(f"tokens column {column!r} must be utf8")
    lists = []
    for v in frame.column(column):
        if v is None or v == "":
            lists.append([])
        else:
            lists.append(v.split(TOKEN_SEP))
    return lists


def tf_idf(frame: Frame, column: str, output: str, min_df: int = 1) -> tuple[Frame, ModelArtifact]:
    """Raw term counts weighted by smoothed idf = ln((N+1)/(df+1)) + 1."""
    docs = _token_lists(frame, column)
    n_docs = len(docs)
    df: dict[str, int] = {}
    for tokens in docs:
        for t in set(tokens):
            df[t] = df.get(t, 0) + 1
    vocabulary = sorted(t for t, c in df.items() if c >= min_df)
    if not vocabulary:
        raise ComponentError("tf_idf: empty vocabulary")
    idf = [math.log((n_docs + 1) / (df[t] + 1)) + 1.0 for t in vocabulary]
    artifact = ModelArtifact(
        kind="fitted-transformer",
        payload={
            "transform": "tf_idf",
            "column": column,
            "output": output,
            "vocabulary": vocabulary,
            "idf": idf,
        },
        feature_dim=len(vocabulary),
        classes=[],
    )
    return _apply_tf_idf(frame, artifact), artifact


def _apply_tf_idf(frame: Frame, artifact: ModelArtifact) -> Frame:
    payload = artifact.payload
    vocabulary = payload["vocabulary"]
    idf = payload["idf"]
    index = {t: i for i, t in enumerate(vocabulary)}
    docs = _token_lists(frame, payload["column"])
    matrix = np.zeros((len(docs), len(vocabulary)))
    for r, tokens in enumerate(docs):
        for t in tokens:
            i = index.get(t)
            if i is not None:
                matrix[r, i] += 1.0
    matrix *= np.asarray(idf)
    return _with_vectors(frame, payload["output"], matrix)


def one_hot(frame: Frame, column: str, output: str) -> tuple[Frame, ModelArtifact]:
    col = frame.schema.column(column)
    if col.dtype.kind not in ("utf8", "int64"):
        raise ComponentError(f"one_hot requires utf8 or int64, got {col.dtype}")
    values = frame.column(column)
    if any(v is None for v in values):
        raise ComponentError(f"one_hot: column {column!r} contains nulls")
    categories = sorted(set(values), key=lambda v: (str(v) if col.dtype.kind == "utf8" else v))
    artifact = ModelArtifact(
        kind="fitted-transformer",
        payload={
            "transform": "one_hot",
            "column": column,
            "output": output,
            "categories": list(categories),
        },
        feature_dim=len(categories),
        classes=[],
    )
    return _apply_one_hot(frame, artifact), artifact


def _apply_one_hot(frame: Frame, artifact: ModelArtifact) -> Frame:
    payload = artifact.payload
    categories = payload["categories"]
    index = {c: i for i, c in enumerate(categories)}
    dim = len(categories)
    cells = []
    for v in frame.column(payload["column"]):
        i = index.get(v)
        if i is None:
            raise ComponentError(f"one_hot: unseen category {v!r}")
        cell = [0.0] * dim
        cell[i] = 1.0
        cells.append(tuple(cell))
    return frame.with_column(payload["output"], vector(dim), ColumnRole.FEATURE, cells)


# -- selection ------------------------------------------------------------------

def _contingency(present: np.ndarray, labels: list, classes: list) -> np.ndarray:
    table = np.zeros((2, len(classes)))
    class_index = {c: j for j, c in enumerate(classes)}
    for p, y in zip(present, labels):
        table[int(p), class_index[y]] += 1
    return table


def _chi2_score(table: np.ndarray) -> float:
    total = table.sum()
    row = table.sum(axis=1, keepdims=True)
    col = table.sum(axis=0, keepdims=True)
    expected = row @ col / total
    mask = expected > 0
    return float((((table - expected) ** 2)[mask] / expected[mask]).sum())


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _info_gain_score(table: np.ndarray) -> float:
    total = table.sum()
    before = _entropy(table.sum(axis=0))
    after = sum(
        (table[r].sum() / total) * _entropy(table[r]) for r in range(2) if table[r].sum() > 0
    )
    return float(before - after)


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def _gini_score(table: np.ndarray) -> float:
    total = table.sum()
    before = _gini(table.sum(axis=0))
    after = sum(
        (table[r].sum() / total) * _gini(table[r]) for r in range(2) if table[r].sum() > 0
    )
    return float(before - after)


_SCORERS = {"chi2": _chi2_score, "info_gain": _info_gain_score, "gini": _gini_score}


def select_features(
    frame: Frame, criterion: str, k: int, features: str, label: str
) -> tuple[Frame, ModelArtifact]:
    """Keep the k best dimensions by score on presence/label contingency
    tables; ties go to the lower index and indices are recorded ascending."""
    scorer = _SCORERS.get(criterion)
    if scorer is None:
        raise ComponentError(f"unknown selection criterion {criterion!r}")
    label_col = frame.schema.column(label)
    if label_col.role is not ColumnRole.LABEL:
        raise ComponentError(f"column {label!r} does not have the label role")
    x = _vector_matrix(frame, features)
    if criterion == "chi2" and float(x.min(initial=0.0)) < 0:
        raise ComponentError("chi2 requires non-negative feature values")
    if not 1 <= k <= x.shape[1]:
        raise ComponentError(f"k={k} out of range 1..{x.shape[1]}")
    labels = list(frame.column(label))
    if any(v is None for v in labels):
        raise ComponentError("label column contains nulls")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ComponentError("selection scores are undefined for a single-class label")

    present = x > 0
    scores = [scorer(_contingency(present[:, j], labels, classes)) for j in range(x.shape[1])]
    ranked = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
    indices = sorted(ranked[:k])
    artifact = ModelArtifact(
        kind="fitted-transformer",
        payload={
            "transform": "select",
            "column": features,
            "output": features,
            "criterion": criterion,
            "indices": indices,
            "scores": [float(s) for s in scores],
        },
        feature_dim=k,
        classes=[],
    )
    return _apply_select(frame, artifact), artifact


def _apply_select(frame: Frame, artifact: ModelArtifact) -> Frame:
    payload = artifact.payload
    x = _vector_matrix(frame, payload["column"])
    out = x[:, payload["indices"]]
    result = frame.with_column(
        payload["output"],
        vector(out.shape[1]),
        ColumnRole.FEATURE,
        tuple(tuple(float(v) for v in row) for row in out),
    )
    return result


# -- PCA ------------------------------------------------------------------------

def pca(frame: Frame, k: int, column: str, output: str | None = None) -> tuple[Frame, ModelArtifact]:
    """Project onto the top-k principal axes of the sample covariance,
    eigendecomposed with Jacobi rotations."""
    x = _vector_matrix(frame, column)
    n, d = x.shape
    if n < 2:
        raise ComponentError("pca requires at least 2 rows")
    if not 1 <= k <= d:
        raise ComponentError(f"k={k} out of range 1..{d}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    _, vectors_full = jacobi_eigen(cov)
    loadings = vectors_full[:, :k]
    artifact = ModelArtifact(
        kind="fitted-transformer",
        payload={
            "transform": "pca",
            "column": column,
            "output": output or column,
            "mean": mean.tolist(),
            "loadings": loadings.tolist(),
        },
        feature_dim=k,
        classes=[],
    )
    return _apply_pca(frame, artifact), artifact


def _apply_pca(frame: Frame, artifact: ModelArtifact) -> Frame:
    payload = artifact.payload
    x = _vector_matrix(frame, payload["column"])
    mean = np.asarray(payload["mean"])
    loadings = np.asarray(payload["loadings"])
    projected = (x - mean) @ loadings
    return _with_vectors(frame, payload["output"], projected)


# -- UDF --------------------------------------------------------------------------

def apply_udf(frame: Frame, expression: str, output: str) -> Frame:
    """Row-wise expression over existing columns; result dtype from the checker."""
    expr = parse_expression(expression)
    columns = {c.name: c.dtype for c in frame.schema.columns}
    dtype = infer_expr_type(expr, columns)
    values = []
    for i in range(frame.row_count):
        v = eval_expr(expr, frame, i)
        if dtype.kind == "float64" and isinstance(v, int):
            v = float(v)
        values.append(v)
    return frame.with_column(output, dtype, ColumnRole.FEATURE if dtype.kind in ("int64", "float64") else ColumnRole.PLAIN, values)


# -- transformer replay -------------------------------------------------------------

_APPLIERS = {
    "tf_idf": _apply_tf_idf,
    "one_hot": _apply_one_hot,
    "select": _apply_select,
    "pca": _apply_pca,
}


def apply_transformer(artifact: ModelArtifact, frame: Frame) -> Frame:
    """Replay a fitted transformer on new data (same mapping as at fit time)."""
    if artifact.kind != "fitted-transformer":
        raise ComponentError(f"not a fitted transformer: {artifact.kind}")
    transform = artifact.payload.get("transform")
    if transform == "scaler":
        return _apply_scaler(artifact, frame)
    fn = _APPLIERS.get(transform)
    if fn is None:
        raise ComponentError(f"unknown transformer payload {transform!r}")
    return fn(frame, artifact)


def _apply_scaler(artifact: ModelArtifact, frame: Frame) -> Frame:
    payload = artifact.payload
    x = _vector_matrix(frame, payload["column"])
    method = payload["method"]
    stats = payload["stats"]
    if method == "normalizer":
        norms = np.linalg.norm(x, axis=1)
        out = np.where(norms[:, None] > 0, x / np.where(norms == 0, 1.0, norms)[:, None], 0.0)
    elif method == "standard":
        mean = np.asarray(stats["mean"])
        std = np.asarray(stats["std"])
        out = np.where(std > 0, (x - mean) / np.where(std == 0, 1.0, std), 0.0)
    else:
        lo = np.asarray(stats["min"])
        hi = np.asarray(stats["max"])
        span = hi - lo
        out = np.where(span > 0, (x - lo) / np.where(span == 0, 1.0, span), 0.0)
    return _with_vectors(frame, payload["column"], out)


# -- registrations -------------------------------------------------------------------

register(
    ComponentSpec(
        kind="scaler",
        phase=StagePhase.FEATURE,
        params=(
            ParamSpec("method", "str", required=True, doc="normalizer | standard | minmax"),
            ParamSpec("column", "str", required=True, doc="target vector column"),
        ),
        in_ports=("in",),
        out_ports=("out", "model"),
        doc="Rescale a feature vector column; emits the fitted transformer.",
    ),
    lambda p, inputs: dict(
        zip(("out", "model"), scale_columns(inputs["in"], p["method"], p["column"]))
    ),
)

register(
    ComponentSpec(
        kind="tokenizer",
        phase=StagePhase.FEATURE,
        params=(
            ParamSpec("column", "str", required=True),
            ParamSpec("output", "str", required=True),
            ParamSpec("lowercase", "bool", default=True),
            ParamSpec("pattern", "str", default=r"\s+"),
        ),
        in_ports=("in",),
        out_ports=("out",),
        doc="Split a text column into token lists.",
    ),
    lambda p, inputs: {
        "out": tokenize(inputs["in"], p["column"], p["output"], p["lowercase"], p["pattern"])
    },
)

register(
    ComponentSpec(
        kind="one_hot",
        phase=StagePhase.FEATURE,
        params=(
            ParamSpec("column", "str", required=True),
            ParamSpec("output", "str", required=True),
        ),
        in_ports=("in",),
        out_ports=("out", "model"),
        doc="One-hot encode a categorical column (lexical category order).",
    ),
    lambda p, inputs: dict(
        zip(("out", "model"), one_hot(inputs["in"], p["column"], p["output"]))
    ),
)

register(
    ComponentSpec(
        kind="tf_idf",
        phase=StagePhase.FEATURE,
        params=(
            ParamSpec("column", "str", required=True, doc="tokens column"),
            ParamSpec("output", "str", required=True),
            ParamSpec("min_df", "int", default=1),
        ),
        in_ports=("in",),
        out_ports=("out", "model"),
        doc="Term-frequency vectors weighted by smoothed inverse document frequency.",
    ),
    lambda p, inputs: dict(
        zip(("out", "model"), tf_idf(inputs["in"], p["column"], p["output"], p["min_df"]))
    ),
)

register(
    ComponentSpec(
        kind="select_features",
        phase=StagePhase.FEATURE,
        params=(
            ParamSpec("criterion", "str", required=True, doc="chi2 | info_gain | gini"),
            ParamSpec("k", "int", required=True),
            ParamSpec("features", "str", required=True, doc="vector column"),
            ParamSpec("label", "str", required=True, doc="label column"),
        ),
        in_ports=("in",),
        out_ports=("out", "model"),
        doc="Keep the k best feature dimensions by a contingency-table score.",
    ),
    lambda p, inputs: dict(
        zip(
            ("out", "model"),
            select_features(inputs["in"], p["criterion"], p["k"], p["features"], p["label"]),
        )
    ),
)

register(
    ComponentSpec(
        kind="pca",
        phase=StagePhase.FEATURE,
        params=(
            ParamSpec("column", "str", required=True),
            ParamSpec("k", "int", required=True),
            ParamSpec("output", "str"),
        ),
        in_ports=("in",),
        out_ports=("out", "model"),
        doc="Principal-component projection onto the top-k axes.",
    ),
    lambda p, inputs: dict(
        zip(("out", "model"), pca(inputs["in"], p["k"], p["column"], p["output"]))
    ),
)

register(
    ComponentSpec(
        kind="udf",
        phase=StagePhase.FEATURE,
        params=(
            ParamSpec("expression", "str", required=True),
            ParamSpec("output", "str", required=True),
        ),
        in_ports=("in",),
        out_ports=("out",),
        doc="Row-wise SQL expression producing a new column.",
    ),
    lambda p, inputs: {"out": apply_udf(inputs["in"], p["expression"], p["output"])},
)
