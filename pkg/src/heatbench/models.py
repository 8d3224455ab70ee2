"""Differentiable classifiers with exact input gradients, the JSON model
format, and the finite-difference gradient oracle used to audit them.

Model files are JSON objects:
    {"kind": "linear-softmax" | "mlp", "input_dim": D, "num_classes": K,
     "layers": [{"rows": R, "cols": C, "weights": [R*C row-major], "bias": [R]}],
     "activation": "none" | "tanh"}
linear-softmax has exactly one layer; mlp has exactly two (one tanh hidden
layer). Loss is cross-entropy with log-sum-exp stabilization.
"""

import json
from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    DimensionMismatchError,
    InvalidLabelError,
    ParseError,
    ShapeMismatchError,
)
from .linalg import ImageTensor

KIND_LINEAR = "linear-softmax"
KIND_MLP = "mlp"
KIND_REMOTE = "remote"


class Classifier(ABC):
    """A K-class classifier over flat pixel vectors.

    Implementations are immutable after construction; evaluation is pure.
    Prediction ties break toward the smallest class index.
    """

    kind: str
    input_dim: int
    num_classes: int
    name: str

    @abstractmethod
    def loss(self, x: ImageTensor, y: int) -> float:
        """Cross-entropy -log p_y(x); always finite and >= 0."""

    @abstractmethod
    def loss_and_input_grad(self, x: ImageTensor, y: int) -> tuple[float, np.ndarray]:
        """Loss plus the exact analytic gradient d loss / d x (length D)."""

    @abstractmethod
    def predict(self, x: ImageTensor) -> int:
        """Argmax of class scores (first index wins ties)."""

    def _check_input(self, x: ImageTensor) -> None:
        if x.dim != self.input_dim:
            raise ShapeMismatchError(
                f"{self.name}: input dim {x.dim} != model input_dim {self.input_dim}"
            )

    def _check_label(self, y: int) -> int:
        y = int(y)
        if not 0 <= y < self.num_classes:
            raise InvalidLabelError(f"{self.name}: label {y} outside [0, {self.num_classes})")
        return y


class LinearSoftmaxClassifier(Classifier):
    kind = KIND_LINEAR

    def __init__(self, weights: np.ndarray, bias: np.ndarray, name: str = "linear"):
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.bias = np.ascontiguousarray(bias, dtype=np.float64)
        self._weights_t = np.ascontiguousarray(self.weights.T)
        self.num_classes, self.input_dim = self.weights.shape
        self.name = name

    def logits(self, x: ImageTensor) -> np.ndarray:
        self._check_input(x)
        return kernels.linear_logits(self.weights, self.bias, x.data)

    def loss(self, x: ImageTensor, y: int) -> float:
        loss, _ = self.loss_and_input_grad(x, y)
        return loss

    def loss_and_input_grad(self, x: ImageTensor, y: int) -> tuple[float, np.ndarray]:
        self._check_input(x)
        y = self._check_label(y)
        loss, grad = kernels.linear_loss_grad(
            self.weights, self.bias, self._weights_t, x.data, y
        )
        return float(loss), grad

    def predict(self, x: ImageTensor) -> int:
        return int(np.argmax(self.logits(x)))


class MlpClassifier(Classifier):
    """One tanh hidden layer followed by a softmax readout."""

    kind = KIND_MLP

    def __init__(self, w1, b1, w2, b2, name: str = "mlp"):
        self.w1 = np.ascontiguousarray(w1, dtype=np.float64)
        self.b1 = np.ascontiguousarray(b1, dtype=np.float64)
        self.w2 = np.ascontiguousarray(w2, dtype=np.float64)
        self.b2 = np.ascontiguousarray(b2, dtype=np.float64)
        self._w1_t = np.ascontiguousarray(self.w1.T)
        self._w2_t = np.ascontiguousarray(self.w2.T)
        if self.w2.shape[1] != self.w1.shape[0]:
            raise DimensionMismatchError(
                f"{name}: hidden sizes disagree ({self.w2.shape[1]} vs {self.w1.shape[0]})"
            )
        self.hidden_dim = self.w1.shape[0]
        self.input_dim = self.w1.shape[1]
        self.num_classes = self.w2.shape[0]
        self.name = name

    def logits(self, x: ImageTensor) -> np.ndarray:
        self._check_input(x)
        return kernels.mlp_logits(self.w1, self.b1, self.w2, self.b2, x.data)

    def loss(self, x: ImageTensor, y: int) -> float:
        loss, _ = self.loss_and_input_grad(x, y)
        return loss

    def loss_and_input_grad(self, x: ImageTensor, y: int) -> tuple[float, np.ndarray]:
        self._check_input(x)
        y = self._check_label(y)
        loss, grad = kernels.mlp_loss_grad(
            self.w1, self.b1, self._w1_t, self.w2, self.b2, self._w2_t, x.data, y
        )
        return float(loss), grad

    def predict(self, x: ImageTensor) -> int:
        return int(np.argmax(self.logits(x)))


def softmax_probabilities(model, x: ImageTensor) -> np.ndarray:
    """Class probabilities from an in-process model's logits (test surface)."""
    z = model.logits(x)
    ez = np.exp(z - z.max())
    return ez / ez.sum()


def _require(obj: dict, field: str, path: str):
    if field not in obj:
        raise ParseError(f"{path}: missing field '{field}'")
    return obj[field]


def _layer_matrix(layer: dict, index: int, path: str) -> tuple[np.ndarray, np.ndarray]:
    rows = int(_require(layer, "rows", path))
    cols = int(_require(layer, "cols", path))
    weights = _require(layer, "weights", path)
    bias = _require(layer, "bias", path)
    if rows < 1 or cols < 1:
        raise DimensionMismatchError(f"{path}: layer {index} has rows={rows}, cols={cols}")
    if len(weights) != rows * cols:
        raise DimensionMismatchError(
            f"{path}: layer {index} weights length {len(weights)} != rows*cols {rows * cols}"
        )
    if len(bias) != rows:
        raise DimensionMismatchError(
            f"{path}: layer {index} bias length {len(bias)} != rows {rows}"
        )
    w = np.asarray(weights, dtype=np.float64).reshape(rows, cols)
    b = np.asarray(bias, dtype=np.float64)
    if not (np.isfinite(w).all() and np.isfinite(b).all()):
        raise ParseError(f"{path}: layer {index} contains non-finite parameters")
    return w, b


def load_model(path) -> Classifier:
    """Load a classifier from the JSON model format.

    Byte-identical files produce identical models. Raises ParseError with
    field diagnostics for malformed files and DimensionMismatchError for
    inconsistent or out-of-range dimensions (e.g. num_classes < 2).
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top-level value must be an object")

    kind = _require(raw, "kind", str(path))
    input_dim = int(_require(raw, "input_dim", str(path)))
    num_classes = int(_require(raw, "num_classes", str(path)))
    layers = _require(raw, "layers", str(path))
    activation = _require(raw, "activation", str(path))
    if num_classes < 2:
        raise DimensionMismatchError(f"{path}: num_classes must be >= 2, got {num_classes}")
    if input_dim < 1:
        raise DimensionMismatchError(f"{path}: input_dim must be >= 1, got {input_dim}")

    name = path.stem
    if kind == KIND_LINEAR:
        if len(layers) != 1:
            raise DimensionMismatchError(f"{path}: linear-softmax needs exactly 1 layer")
        if activation != "none":
            raise ParseError(f"{path}: linear-softmax activation must be 'none'")
        w, b = _layer_matrix(layers[0], 0, str(path))
        if w.shape != (num_classes, input_dim):
            raise DimensionMismatchError(
                f"{path}: layer 0 shape {w.shape} != ({num_classes}, {input_dim})"
            )
        return LinearSoftmaxClassifier(w, b, name=name)
    if kind == KIND_MLP:
        if len(layers) != 2:
            raise DimensionMismatchError(f"{path}: mlp needs exactly 2 layers")
        if activation != "tanh":
            raise ParseError(f"{path}: mlp activation must be 'tanh'")
        w1, b1 = _layer_matrix(layers[0], 0, str(path))
        w2, b2 = _layer_matrix(layers[1], 1, str(path))
        if w1.shape[1] != input_dim:
            raise DimensionMismatchError(
                f"{path}: layer 0 cols {w1.shape[1]} != input_dim {input_dim}"
            )
        if w2.shape != (num_classes, w1.shape[0]):
            raise DimensionMismatchError(
                f"{path}: layer 1 shape {w2.shape} != ({num_classes}, {w1.shape[0]})"
            )
        return MlpClassifier(w1, b1, w2, b2, name=name)
    raise ParseError(f"{path}: unknown kind '{kind}'")


def finite_diff_grad(model: Classifier, x: ImageTensor, y: int, h: float) -> np.ndarray:
    """Central-difference input gradient, (L(x+h e_i) - L(x-h e_i)) / 2h."""
    if h <= 0.0:
        raise ValueError("h must be > 0")
    base = x.data
    grad = np.empty(base.size)
    probe = base.copy()
    for i in range(base.size):
        orig = probe[i]
        probe[i] = orig + h
        lp = model.loss(ImageTensor(probe.copy(), x.shape), y)
        probe[i] = orig - h
        lm = model.loss(ImageTensor(probe.copy(), x.shape), y)
        probe[i] = orig
        grad[i] = (lp - lm) / (2.0 * h)
    return grad
