"""Multinomial logistic regression over frozen embedding features.

Loss: mean over examples of class-weighted cross-entropy plus (l2/2) times the
squared Frobenius norm of the weight matrix; biases are not penalized. Training
is full-batch gradient descent from zero init with Armijo backtracking, stopped
at gradient max-norm < tol or an iteration cap. Labels {-1, 0, +1} map to class
indices {0, 1, 2}; argmax ties resolve to the lowest class index.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import TrainingError

LABEL_ORDER = (-1, 0, 1)
MODEL_MAGIC = b"CAFM"
MODEL_VERSION = 1


def label_to_class(label: int) -> int:
    try:
        return LABEL_ORDER.index(label)
    except ValueError:
        raise TrainingError(f"label must be one of {LABEL_ORDER}, got {label!r}")


def class_to_label(cls: int) -> int:
    return LABEL_ORDER[cls]


@dataclass(frozen=True)
class TrainConfig:
    l2: float = 1e-4
    class_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    max_iter: int = 10_000
    tol: float = 1e-6
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    init_step: float = 1.0

    def __post_init__(self):
        if self.l2 < 0:
            raise TrainingError(f"l2 must be >= 0, got {self.l2}")
        if len(self.class_weights) != 3 or any(w <= 0 for w in self.class_weights):
            raise TrainingError(f"class_weights must be 3 positives, got {self.class_weights}")


@dataclass
class Model:
    weights: np.ndarray  # (3, dim) float64
    bias: np.ndarray     # (3,) float64
    config: TrainConfig
    encoder: str = ""
    dimension: str = ""
    language: str = ""
    n_iter: int = 0
    converged: bool = False
    final_grad_norm: float = float("nan")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def parameter_count(self) -> int:
        return self.weights.size + self.bias.size


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_grad(weights: np.ndarray, bias: np.ndarray, x: np.ndarray, y: np.ndarray,
                  sample_weights: np.ndarray, l2: float
                  ) -> tuple[float, np.ndarray, np.ndarray]:
    """Objective value and gradients wrt weights (3, dim) and bias (3,)."""
    n = x.shape[0]
    logits = x @ weights.T + bias
    logp = _log_softmax(logits)
    loss = -(sample_weights * logp[np.arange(n), y]).sum() / n
    loss += 0.5 * l2 * float((weights * weights).sum())
    probs = np.exp(logp)
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta *= sample_weights[:, None]
    grad_w = delta.T @ x / n + l2 * weights
    grad_b = delta.sum(axis=0) / n
    return float(loss), grad_w, grad_b


def train(x: np.ndarray, labels: Sequence[int], config: TrainConfig = TrainConfig(),
          encoder: str = "", dimension: str = "", language: str = "") -> Model:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise TrainingError(f"features must be 2-d, got shape {x.shape}")
    n, dim = x.shape
    if n == 0:
        raise TrainingError("cannot train on zero examples")
    if len(labels) != n:
        raise TrainingError(f"{n} feature rows but {len(labels)} labels")
    if not np.all(np.isfinite(x)):
        raise TrainingError("features contain non-finite values")
    y = np.array([label_to_class(l) for l in labels], dtype=np.intp)
    cw = np.asarray(config.class_weights, dtype=np.float64)
    sample_weights = cw[y]

    weights = np.zeros((3, dim))
    bias = np.zeros(3)
    loss, grad_w, grad_b = loss_and_grad(weights, bias, x, y, sample_weights, config.l2)
    n_iter = 0
    converged = False
    grad_norm = float(max(np.abs(grad_w).max(), np.abs(grad_b).max()))
    while n_iter < config.max_iter:
        if grad_norm < config.tol:
            converged = True
            break
        step = config.init_step
        sq = float((grad_w * grad_w).sum() + (grad_b * grad_b).sum())
        while True:
            new_w = weights - step * grad_w
            new_b = bias - step * grad_b
            new_loss, new_gw, new_gb = loss_and_grad(new_w, new_b, x, y,
                                                     sample_weights, config.l2)
            if new_loss <= loss - config.armijo_c * step * sq:
                break
            step *= config.backtrack
            if step < 1e-20:
                raise TrainingError("line search collapsed; objective not decreasing")
        weights, bias, loss, grad_w, grad_b = new_w, new_b, new_loss, new_gw, new_gb
        grad_norm = float(max(np.abs(grad_w).max(), np.abs(grad_b).max()))
        n_iter += 1
    else:
        converged = grad_norm < config.tol
    return Model(weights=weights, bias=bias, config=config, encoder=encoder,
                 dimension=dimension, language=language, n_iter=n_iter,
                 converged=converged, final_grad_norm=float(grad_norm))


def predict(model: Model, x: np.ndarray) -> list[int]:
    """Ternary labels; argmax ties break toward the lowest class index."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise TrainingError(f"features must be (n, {model.dim}), got {x.shape}")
    logits = x @ model.weights.T + model.bias
    # np.argmax already returns the first (lowest) index among equals
    return [class_to_label(int(c)) for c in np.argmax(logits, axis=1)]


def predict_proba(model: Model, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return _softmax(x @ model.weights.T + model.bias)


def precision_recall_f1(gold: Sequence[int], predicted: Sequence[int], label: int
                        ) -> tuple[float, float, float]:
    """Per-class scores; empty denominators give 0.0 rather than an error."""
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold vs {len(predicted)} predicted")
    tp = sum(1 for g, p in zip(gold, predicted) if g == label and p == label)
    n_pred = sum(1 for p in predicted if p == label)
    n_gold = sum(1 for g in gold if g == label)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def macro_f1(gold: Sequence[int], predicted: Sequence[int],
             labels: Sequence[int] = LABEL_ORDER) -> float:
    """Unweighted mean of per-class F1 over all three classes, absent or not."""
    return float(np.mean([precision_recall_f1(gold, predicted, l)[2] for l in labels]))


DEFAULT_WEIGHT_GRID = (0.5, 1.0, 2.0, 4.0)


@dataclass
class GridSearchResult:
    best_weights: tuple[float, float, float]
    best_dev_f1: float
    table: list[tuple[tuple[float, float, float], float]] = field(default_factory=list)


def grid_search_class_weights(train_x: np.ndarray, train_y: Sequence[int],
                              dev_x: np.ndarray, dev_y: Sequence[int],
                              grid: Sequence[float] = DEFAULT_WEIGHT_GRID,
                              base: TrainConfig = TrainConfig()) -> GridSearchResult:
    """Try every weight triple in the cube grid^3; pick the best dev macro-F1.

    Exact ties go to the lexicographically smaller triple, which is the first
    seen because itertools.product emits triples in sorted order.
    """
    best: tuple[float, float, float] | None = None
    best_f1 = -1.0
    table = []
    for triple in product(sorted(grid), repeat=3):
        cfg = TrainConfig(l2=base.l2, class_weights=triple, max_iter=base.max_iter,
                          tol=base.tol, armijo_c=base.armijo_c,
                          backtrack=base.backtrack, init_step=base.init_step)
        model = train(train_x, train_y, cfg)
        f1 = macro_f1(dev_y, predict(model, dev_x))
        table.append((triple, f1))
        if f1 > best_f1:
            best, best_f1 = triple, f1
    assert best is not None
    return GridSearchResult(best_weights=best, best_dev_f1=best_f1, table=table)


def save_model(model: Model, path: str | Path) -> None:
    meta = {"version": MODEL_VERSION, "dim": model.dim, "encoder": model.encoder,
            "dimension": model.dimension, "language": model.language,
            "n_iter": model.n_iter, "converged": model.converged,
            "final_grad_norm": model.final_grad_norm,
            "config": {"l2": model.config.l2,
                       "class_weights": list(model.config.class_weights),
                       "max_iter": model.config.max_iter, "tol": model.config.tol,
                       "armijo_c": model.config.armijo_c,
                       "backtrack": model.config.backtrack,
                       "init_step": model.config.init_step}}
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(model.weights.astype("<f8").tobytes())
        fh.write(model.bias.astype("<f8").tobytes())


def load_model(path: str | Path) -> Model:
    with open(path, "rb") as fh:
        if fh.read(4) != MODEL_MAGIC:
            raise TrainingError(f"{path}: not a model file")
        (meta_len,) = struct.unpack("<I", fh.read(4))
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
        if meta.get("version") != MODEL_VERSION:
            raise TrainingError(f"{path}: unsupported model version")
        dim = int(meta["dim"])
        weights = np.frombuffer(fh.read(8 * 3 * dim), dtype="<f8").reshape(3, dim).copy()
        bias = np.frombuffer(fh.read(8 * 3), dtype="<f8").copy()
    c = meta["config"]
    config = TrainConfig(l2=c["l2"], class_weights=tuple(c["class_weights"]),
                         max_iter=c["max_iter"], tol=c["tol"], armijo_c=c["armijo_c"],
                         backtrack=c["backtrack"], init_step=c["init_step"])
    return Model(weights=weights, bias=bias, config=config, encoder=meta["encoder"],
                 dimension=meta["dimension"], language=meta["language"],
                 n_iter=meta["n_iter"], converged=meta["converged"],
                 final_grad_norm=meta["final_grad_norm"])
