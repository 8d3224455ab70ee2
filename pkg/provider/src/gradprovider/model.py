"""Adapter for the engine's JSON model format with analytic gradients.

Supported kinds: "linear-softmax" (one layer) and "mlp" (one tanh hidden
layer). Loss is stabilized cross-entropy; gradients are closed-form, so the
provider needs no autodiff framework.
"""

import json
from pathlib import Path

import numpy as np


class ModelError(Exception):
    pass


class HostedModel:
    def __init__(self, kind, layers, input_dim, num_classes):
        self.kind = kind
        self.layers = layers  # list of (weights, bias)
        self.input_dim = input_dim
        self.num_classes = num_classes

    def _logits_hidden(self, x):
        if self.kind == "linear-softmax":
            (w, b), = self.layers
            return w @ x + b, None
        (w1, b1), (w2, b2) = self.layers
        hidden = np.tanh(w1 @ x + b1)
        return w2 @ hidden + b2, hidden

    def predict(self, x: np.ndarray) -> int:
        logits, _ = self._logits_hidden(x)
        return int(np.argmax(logits))

    def loss_and_grad(self, x: np.ndarray, y: int) -> tuple[float, np.ndarray]:
        logits, hidden = self._logits_hidden(x)
        zmax = logits.max()
        ez = np.exp(logits - zmax)
        total = ez.sum()
        loss = float(np.log(total) + zmax - logits[y])
        p = ez / total
        p[y] -= 1.0
        if self.kind == "linear-softmax":
            (w, _), = self.layers
            grad = w.T @ p
        else:
            (w1, _), (w2, _) = self.layers
            dh = w2.T @ p
            grad = w1.T @ (dh * (1.0 - hidden * hidden))
        return loss, grad


def load_hosted_model(path) -> HostedModel:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"{path}: {exc}") from exc
    try:
        kind = raw["kind"]
        input_dim = int(raw["input_dim"])
        num_classes = int(raw["num_classes"])
        layer_objs = raw["layers"]
        activation = raw["activation"]
    except (KeyError, TypeError) as exc:
        raise ModelError(f"{path}: missing or malformed field: {exc}") from exc
    if num_classes < 2:
        raise ModelError(f"{path}: num_classes must be >= 2")
    expected = {"linear-softmax": (1, "none"), "mlp": (2, "tanh")}
    if kind not in expected:
        raise ModelError(f"{path}: unknown kind '{kind}'")
    n_layers, act = expected[kind]
    if len(layer_objs) != n_layers or activation != act:
        raise ModelError(f"{path}: {kind} needs {n_layers} layer(s), activation '{act}'")

    layers = []
    in_size = input_dim
    for i, obj in enumerate(layer_objs):
        rows, cols = int(obj["rows"]), int(obj["cols"])
        w = np.asarray(obj["weights"], dtype=np.float64)
        b = np.asarray(obj["bias"], dtype=np.float64)
        if w.size != rows * cols or b.size != rows or cols != in_size:
            raise ModelError(f"{path}: layer {i} dimensions are inconsistent")
        layers.append((w.reshape(rows, cols), b))
        in_size = rows
    if in_size != num_classes:
        raise ModelError(f"{path}: final layer rows {in_size} != num_classes {num_classes}")
    return HostedModel(kind, layers, input_dim, num_classes)
