"""Model fitting, prediction and evaluation.

The artifact container is a small binary format (magic FFML) wrapping a JSON
payload; floats survive bit-exactly because Python's json round-trips their
shortest repr.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ComponentError
from ..frame import FLOAT64, INT64, UTF8, ColumnRole, Frame, vector
from ..numerics import lbfgs_minimize
from ..stage import StagePhase
from . import ComponentSpec, ParamSpec, register

ARTIFACT_MAGIC = b"FFML"
ARTIFACT_VERSION = 1


@dataclass
class ModelArtifact:
    """Serialized model or fitted transformer exchanged through the store."""

    kind: str  # "logreg" | "random_forest" | "fitted-transformer"
    payload: dict
    feature_dim: int
    classes: list = field(default_factory=list)

    def serialize(self) -> bytes:
        body = json.dumps(
            {"payload": self.payload, "feature_dim": self.feature_dim, "classes": self.classes},
            sort_keys=True,
            separators=(",", ":"),
        ).encode("utf-8")
        kind_raw = self.kind.encode("utf-8")
        return (
            ARTIFACT_MAGIC
            + struct.pack("<I", ARTIFACT_VERSION)
            + struct.pack("<H", len(kind_raw))
            + kind_raw
            + struct.pack("<I", len(body))
            + body
        )

    @staticmethod
    def deserialize(raw: bytes) -> "ModelArtifact":
        if raw[:4] != ARTIFACT_MAGIC:
            raise ComponentError("bad artifact magic")
        (version,) = struct.unpack_from("<I", raw, 4)
        if version != ARTIFACT_VERSION:
            raise ComponentError(f"unsupported artifact version {version}")
        (kind_len,) = struct.unpack_from("<H", raw, 8)
        kind = raw[10 : 10 + kind_len].decode("utf-8")
        offset = 10 + kind_len
        (body_len,) = struct.unpack_from("<I", raw, offset)
        body = json.loads(raw[offset + 4 : offset + 4 + body_len].decode("utf-8"))
        return ModelArtifact(kind, body["payload"], body["feature_dim"], body["classes"])


def _matrix(frame: Frame, column: str) -> np.ndarray:
    col = frame.schema.column(column)
    if col.dtype.kind != "vector":
        raise ComponentError(f"column {column!r} is not a vector column ({col.dtype})")
    cells = frame.column(column)
    if any(v is None for v in cells):
        raise ComponentError(f"column {column!r} contains nulls")
    x = np.array(cells, dtype=float).reshape(frame.row_count, col.dtype.dim)
    if not np.all(np.isfinite(x)):
        raise ComponentError(f"column {column!r} contains non-finite values")
    return x


def _labels(frame: Frame, label: str) -> tuple[list, str]:
    col = frame.schema.column(label)
    if col.dtype.kind not in ("utf8", "int64"):
        raise ComponentError(f"label column must be utf8 or int64, got {col.dtype}")
    values = list(frame.column(label))
    if any(v is None for v in values):
        raise ComponentError("label column contains nulls")
    return values, col.dtype.kind


# -- logistic regression ------------------------------------------------------

def logreg_objective(x: np.ndarray, y_idx: np.ndarray, n_classes: int, l2_lambda: float):
    """Objective/gradient callable over flattened class-by-(dim+1) weights:
    mean cross-entropy plus (lambda/2)*||non-bias weights||^2."""
    n, d = x.shape
    xb = np.hstack([x, np.ones((n, 1))])
    y_onehot = np.zeros((n, n_classes))
    y_onehot[np.arange(n), y_idx] = 1.0

    def objective(w_flat: np.ndarray):
        w = w_flat.reshape(n_classes, d + 1)
        z = xb @ w.T
        z -= z.max(axis=1, keepdims=True)
        expz = np.exp(z)
        p = expz / expz.sum(axis=1, keepdims=True)
        ce = -np.log(np.clip(p[np.arange(n), y_idx], 1e-300, None)).mean()
        reg = 0.5 * l2_lambda * float((w[:, :d] ** 2).sum())
        grad = (p - y_onehot).T @ xb / n
        grad[:, :d] += l2_lambda * w[:, :d]
        return ce + reg, grad.ravel()

    return objective


def fit_logreg(
    frame: Frame,
    features: str,
    label: str,
    l2_lambda: float = 1e-4,
    max_iters: int = 100,
    tol: float = 1e-6,
    memory: int = 10,
) -> ModelArtifact:
    """Multinomial logistic regression: mean cross-entropy plus an L2 penalty
    on the non-bias weights, minimized with L-BFGS."""
    if l2_lambda < 0:
        raise ComponentError("l2_lambda must be >= 0")
    x = _matrix(frame, features)
    y_values, label_dtype = _labels(frame, label)
    classes = sorted(set(y_values))
    if len(classes) < 2:
        raise ComponentError("need at least 2 label classes")
    n, d = x.shape
    c = len(classes)
    class_index = {v: i for i, v in enumerate(classes)}
    y_idx = np.array([class_index[v] for v in y_values])

    result = lbfgs_minimize(
        logreg_objective(x, y_idx, c, l2_lambda),
        np.zeros(c * (d + 1)),
        m=memory,
        max_iters=max_iters,
        tol=tol,
    )
    weights = result.x.reshape(c, d + 1)
    return ModelArtifact(
        kind="logreg",
        payload={
            "weights": weights.tolist(),
            "classes": list(classes),
            "classes_dtype": label_dtype,
            "feature_column": features,
            "trace": [[k, f, g] for k, f, g in result.trace],
            "converged": result.converged,
        },
        feature_dim=d,
        classes=list(classes),
    )


# -- random forest --------------------------------------------------------------

def _gini_counts(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def split_impurity(y_left: np.ndarray, y_right: np.ndarray, n_classes: int) -> float:
    """Size-weighted Gini impurity of a two-way label split."""
    left = np.bincount(y_left, minlength=n_classes).astype(float)
    right = np.bincount(y_right, minlength=n_classes).astype(float)
    total = len(y_left) + len(y_right)
    return (len(y_left) * _gini_counts(left) + len(y_right) * _gini_counts(right)) / total


def best_split(x: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int):
    """Best (feature, threshold, impurity) over midpoints of sorted distinct
    values; ties broken by lower feature index then lower threshold."""
    best = None
    for j in range(x.shape[1]):
        values = np.unique(x[:, j])
        if len(values) < 2:
            continue
        thresholds = (values[:-1] + values[1:]) / 2.0
        for thr in thresholds:
            mask = x[:, j] <= thr
            n_left = int(mask.sum())
            if n_left < min_leaf or len(y) - n_left < min_leaf:
                continue
            impurity = split_impurity(y[mask], y[~mask], n_classes)
            if best is None or impurity < best[2] - 1e-15:
                best = (j, float(thr), impurity)
    return best


def _build_tree(x, y, n_classes, depth, max_depth, min_leaf):
    counts = np.bincount(y, minlength=n_classes)
    majority = int(np.argmax(counts))  # ties go to the lowest class index
    if _gini_counts(counts.astype(float)) == 0.0 or depth >= max_depth or len(y) < 2 * min_leaf:
        return {"leaf": majority}
    split = best_split(x, y, n_classes, min_leaf)
    if split is None:
        return {"leaf": majority}
    j, thr, _ = split
    mask = x[:, j] <= thr
    return {
        "feature": j,
        "threshold": thr,
        "left": _build_tree(x[mask], y[mask], n_classes, depth + 1, max_depth, min_leaf),
        "right": _build_tree(x[~mask], y[~mask], n_classes, depth + 1, max_depth, min_leaf),
    }


def _tree_predict(tree: dict, row: np.ndarray) -> int:
    while "leaf" not in tree:
        tree = tree["left"] if row[tree["feature"]] <= tree["threshold"] else tree["right"]
    return tree["leaf"]


def fit_random_forest(
    frame: Frame,
    features: str,
    label: str,
    n_trees: int = 20,
    max_depth: int = 8,
    min_leaf: int = 2,
    seed: int = 0,
) -> ModelArtifact:
    """Bootstrap-aggregated CART trees with Gini splits; fully seeded, no
    feature subsampling."""
    if n_trees < 1:
        raise ComponentError("n_trees must be >= 1")
    x = _matrix(frame, features)
    y_values, label_dtype = _labels(frame, label)
    classes = sorted(set(y_values))
    if len(classes) < 2:
        raise ComponentError("need at least 2 label classes")
    class_index = {v: i for i, v in enumerate(classes)}
    y = np.array([class_index[v] for v in y_values])
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        idx = rng.integers(0, len(y), len(y))
        trees.append(_build_tree(x[idx], y[idx], len(classes), 0, max_depth, min_leaf))
    return ModelArtifact(
        kind="random_forest",
        payload={
            "trees": trees,
            "classes": list(classes),
            "classes_dtype": label_dtype,
            "feature_column": features,
        },
        feature_dim=x.shape[1],
        classes=list(classes),
    )


# -- prediction / evaluation -------------------------------------------------------

def predict(
    model: ModelArtifact,
    frame: Frame,
    features: str | None = None,
    output: str = "prediction",
    probabilities: str = "probabilities",
) -> Frame:
    """Append a prediction column (and per-class probabilities for logreg)."""
    if model.kind not in ("logreg", "random_forest"):
        raise ComponentError(f"cannot predict with artifact kind {model.kind!r}")
    column = features or model.payload["feature_column"]
    x = _matrix(frame, column)
    if x.shape[1] != model.feature_dim:
        raise ComponentError(
            f"feature dim mismatch: model expects {model.feature_dim}, got {x.shape[1]}"
        )
    classes = model.payload["classes"]
    dtype = INT64 if model.payload["classes_dtype"] == "int64" else UTF8

    if model.kind == "logreg":
        w = np.asarray(model.payload["weights"])
        xb = np.hstack([x, np.ones((x.shape[0], 1))])
        z = xb @ w.T
        z -= z.max(axis=1, keepdims=True)
        expz = np.exp(z)
        p = expz / expz.sum(axis=1, keepdims=True)
        pred_idx = np.argmax(p, axis=1)
        result = frame.with_column(
            output, dtype, ColumnRole.PLAIN, [classes[i] for i in pred_idx]
        )
        return result.with_column(
            probabilities,
            vector(len(classes)),
            ColumnRole.PLAIN,
            tuple(tuple(float(v) for v in row) for row in p),
        )

    votes = np.zeros((x.shape[0], len(classes)), dtype=int)
    for tree in model.payload["trees"]:
        for i in range(x.shape[0]):
            votes[i, _tree_predict(tree, x[i])] += 1
    pred_idx = np.argmax(votes, axis=1)
    return frame.with_column(output, dtype, ColumnRole.PLAIN, [classes[i] for i in pred_idx])


def evaluate(frame: Frame, label: str, prediction: str = "prediction") -> dict:
    """Accuracy plus per-class support and correct counts."""
    if frame.row_count == 0:
        raise ComponentError("cannot evaluate an empty frame")
    label_col = frame.schema.column(label)
    pred_col = frame.schema.column(prediction)
    if label_col.dtype != pred_col.dtype:
        raise ComponentError(
            f"label dtype {label_col.dtype} != prediction dtype {pred_col.dtype}"
        )
    y = frame.column(label)
    p = frame.column(prediction)
    matches = sum(1 for a, b in zip(y, p) if a == b)
    per_class = []
    for cls in sorted(set(y)):
        support = sum(1 for v in y if v == cls)
        correct = sum(1 for a, b in zip(y, p) if a == cls and a == b)
        per_class.append({"label": cls, "support": support, "correct": correct})
    return {"accuracy": matches / frame.row_count, "per_class": per_class}


def metrics_frame(metrics: dict) -> Frame:
    names = ["accuracy"]
    values = [float(metrics["accuracy"])]
    for entry in metrics["per_class"]:
        names.append(f"support_{entry['label']}")
        values.append(float(entry["support"]))
        names.append(f"correct_{entry['label']}")
        values.append(float(entry["correct"]))
    return Frame.from_columns(
        [("metric", UTF8, ColumnRole.PLAIN, names), ("value", FLOAT64, ColumnRole.PLAIN, values)]
    )


# -- registrations ------------------------------------------------------------------

register(
    ComponentSpec(
        kind="logreg_fit",
        phase=StagePhase.MODEL,
        params=(
            ParamSpec("features", "str", required=True),
            ParamSpec("label", "str", required=True),
            ParamSpec("l2_lambda", "float", default=1e-4),
            ParamSpec("max_iters", "int", default=100),
            ParamSpec("tol", "float", default=1e-6),
            ParamSpec("memory", "int", default=10),
        ),
        in_ports=("in",),
        out_ports=("model",),
        doc="Fit multinomial logistic regression with L-BFGS.",
    ),
    lambda p, inputs: {
        "model": fit_logreg(
            inputs["in"], p["features"], p["label"],
            p["l2_lambda"], p["max_iters"], p["tol"], p["memory"],
        )
    },
)

register(
    ComponentSpec(
        kind="random_forest_fit",
        phase=StagePhase.MODEL,
        params=(
            ParamSpec("features", "str", required=True),
            ParamSpec("label", "str", required=True),
            ParamSpec("n_trees", "int", default=20),
            ParamSpec("max_depth", "int", default=8),
            ParamSpec("min_leaf", "int", default=2),
            ParamSpec("seed", "int", default=0),
        ),
        in_ports=("in",),
        out_ports=("model",),
        doc="Fit a seeded bootstrap random forest with Gini splits.",
    ),
    lambda p, inputs: {
        "model": fit_random_forest(
            inputs["in"], p["features"], p["label"],
            p["n_trees"], p["max_depth"], p["min_leaf"], p["seed"],
        )
    },
)

register(
    ComponentSpec(
        kind="predict",
        phase=StagePhase.PREDICT,
        params=(
            ParamSpec("features", "str", doc="override the model's feature column"),
            ParamSpec("output", "str", default="prediction"),
            ParamSpec("probabilities", "str", default="probabilities"),
        ),
        in_ports=("model", "in"),
        out_ports=("out",),
        doc="Apply a fitted model; adds prediction (and probabilities for logreg).",
    ),
    lambda p, inputs: {
        "out": predict(
            inputs["model"], inputs["in"], p["features"], p["output"], p["probabilities"]
        )
    },
)

register(
    ComponentSpec(
        kind="evaluate",
        phase=StagePhase.PREDICT,
        params=(
            ParamSpec("label", "str", required=True),
            ParamSpec("prediction", "str", default="prediction"),
        ),
        in_ports=("in",),
        out_ports=("metrics",),
        doc="Compare predictions against labels; emits a metrics table.",
    ),
    lambda p, inputs: {
        "metrics": metrics_frame(evaluate(inputs["in"], p["label"], p["prediction"]))
    },
)
