#!/usr/bin/env python3
"""Generate the committed fixtures: the 10-class Gaussian-blob dataset
(3x8x8 images, 200 eval samples) and the eight zoo models (4 white-box
surrogates, 4 held-out black-box targets) trained to convergence on it.

Everything is seeded; rerunning reproduces the committed files byte for
byte. Class separation and noise are tuned so every model clears 95% clean
accuracy while the 8/255 budget still flips a useful fraction of samples.

Usage: python scripts/make_fixtures.py [--root REPO_ROOT]
"""

import argparse
import json
from pathlib import Path

import numpy as np

MASTER_SEED = 20250810
NUM_CLASSES = 10
SHAPE = (3, 8, 8)
DIM = SHAPE[0] * SHAPE[1] * SHAPE[2]
N_TRAIN = 4000
N_EVAL = 200

# Class-mean amplitude and per-pixel noise; the ratio sets both the clean
# accuracy ceiling and how much of the margin an 8/255 step can eat.
PROTO_AMP = 0.055
NOISE_STD = 0.17

EPOCHS = 900
LEARNING_RATE = 0.01

# Training runs on centered pixels (x - CENTER) for conditioning; the shift
# is folded back into the first-layer bias so the saved model takes raw x.
CENTER = 0.5


def sample_blobs(rng, prototypes, n):
    labels = rng.integers(0, NUM_CLASSES, size=n)
    x = prototypes[labels] + NOISE_STD * rng.normal(size=(n, DIM))
    return np.clip(x, 0.0, 1.0), labels


def softmax(z):
    ez = np.exp(z - z.max(axis=1, keepdims=True))
    return ez / ez.sum(axis=1, keepdims=True)


def one_hot(labels):
    out = np.zeros((labels.size, NUM_CLASSES))
    out[np.arange(labels.size), labels] = 1.0
    return out


class Adam:
    def __init__(self, params, lr):
        self.lr = lr
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2, eps = 0.9, 0.999, 1e-8
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            mhat = self.m[i] / (1 - b1 ** self.t)
            vhat = self.v[i] / (1 - b2 ** self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + eps)


def train_linear(x, y, rng, l2):
    xc = x - CENTER
    w = rng.normal(0.0, 1.0 / np.sqrt(DIM), size=(NUM_CLASSES, DIM))
    b = np.zeros(NUM_CLASSES)
    onehot = one_hot(y)
    opt = Adam([w, b], LEARNING_RATE)
    for _ in range(EPOCHS):
        p = softmax(xc @ w.T + b)
        delta = (p - onehot) / xc.shape[0]
        gw = delta.T @ xc + l2 * w
        gb = delta.sum(axis=0)
        opt.step([w, b], [gw, gb])
    b = b - w.sum(axis=1) * CENTER
    return {"layers": [(w, b)], "kind": "linear-softmax", "activation": "none"}


def train_mlp(x, y, rng, hidden, l2):
    xc = x - CENTER
    w1 = rng.normal(0.0, 1.0 / np.sqrt(DIM), size=(hidden, DIM))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(NUM_CLASSES, hidden))
    b2 = np.zeros(NUM_CLASSES)
    onehot = one_hot(y)
    opt = Adam([w1, b1, w2, b2], LEARNING_RATE)
    for _ in range(EPOCHS):
        h = np.tanh(xc @ w1.T + b1)
        p = softmax(h @ w2.T + b2)
        delta = (p - onehot) / xc.shape[0]
        gw2 = delta.T @ h + l2 * w2
        gb2 = delta.sum(axis=0)
        dh = (delta @ w2) * (1.0 - h * h)
        gw1 = dh.T @ xc + l2 * w1
        gb1 = dh.sum(axis=0)
        opt.step([w1, b1, w2, b2], [gw1, gb1, gw2, gb2])
    b1 = b1 - w1.sum(axis=1) * CENTER
    return {"layers": [(w1, b1), (w2, b2)], "kind": "mlp", "activation": "tanh"}


def accuracy(spec, x, y):
    acts = x
    for i, (w, b) in enumerate(spec["layers"]):
        acts = acts @ w.T + b
        if i + 1 < len(spec["layers"]):
            acts = np.tanh(acts)
    return float((acts.argmax(axis=1) == y).mean())


def model_json(spec):
    layers = []
    for w, b in spec["layers"]:
        layers.append({
            "rows": w.shape[0],
            "cols": w.shape[1],
            "weights": [float(v) for v in w.ravel()],
            "bias": [float(v) for v in b],
        })
    return {
        "kind": spec["kind"],
        "input_dim": DIM,
        "num_classes": NUM_CLASSES,
        "layers": layers,
        "activation": spec["activation"],
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default=Path(__file__).resolve().parent.parent,
                        type=Path, help="repository root to write zoo/ and fixtures/")
    args = parser.parse_args()

    rng = np.random.default_rng(MASTER_SEED)
    prototypes = 0.5 + PROTO_AMP * rng.normal(size=(NUM_CLASSES, DIM))
    x_train, y_train = sample_blobs(rng, prototypes, N_TRAIN)
    x_eval, y_eval = sample_blobs(rng, prototypes, N_EVAL)

    # Each model trains on its own 60% slice of the training pool so the
    # ensemble members disagree beyond architecture and init.
    def subset(seed):
        idx = np.random.default_rng([MASTER_SEED, seed]).permutation(N_TRAIN)
        take = idx[: int(0.6 * N_TRAIN)]
        return x_train[take], y_train[take]

    recipes = [
        ("linear_a", "linear", dict(l2=1e-3), 101),
        ("linear_b", "linear", dict(l2=5e-3), 102),
        ("mlp_a", "mlp", dict(hidden=32, l2=5e-4), 103),
        ("mlp_b", "mlp", dict(hidden=64, l2=5e-4), 104),
        ("target_a", "mlp", dict(hidden=24, l2=1e-3), 201),
        ("target_b", "mlp", dict(hidden=40, l2=5e-4), 202),
        ("target_c", "mlp", dict(hidden=48, l2=5e-4), 203),
        ("target_d", "mlp", dict(hidden=56, l2=2e-4), 204),
    ]

    zoo_dir = args.root / "zoo"
    fixtures_dir = args.root / "fixtures"
    zoo_dir.mkdir(parents=True, exist_ok=True)
    fixtures_dir.mkdir(parents=True, exist_ok=True)

    for name, kind, params, seed in recipes:
        model_rng = np.random.default_rng([MASTER_SEED, seed])
        xs, ys = subset(seed)
        if kind == "linear":
            spec = train_linear(xs, ys, model_rng, **params)
        else:
            spec = train_mlp(xs, ys, model_rng, **params)
        train_acc = accuracy(spec, xs, ys)
        eval_acc = accuracy(spec, x_eval, y_eval)
        path = zoo_dir / f"{name}.json"
        path.write_text(json.dumps(model_json(spec)) + "\n")
        print(f"{name:10s} train acc {train_acc:6.2%}  eval acc {eval_acc:6.2%}  -> {path}")

    lines = [json.dumps({"name": "blobs64", "num_classes": NUM_CLASSES,
                         "shape": list(SHAPE)})]
    for xi, yi in zip(x_eval, y_eval):
        lines.append(json.dumps({"x": [float(v) for v in xi], "y": int(yi)}))
    data_path = fixtures_dir / "blobs64.jsonl"
    data_path.write_text("\n".join(lines) + "\n")
    print(f"dataset    {N_EVAL} samples -> {data_path}")


if __name__ == "__main__":
    main()
