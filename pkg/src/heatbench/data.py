"""Fixture dataset format: JSON-lines with a header line
{"name", "num_classes", "shape": [C, H, W]} followed by one
{"x": [D reals in [0, 1]], "y": int} object per sample.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidLabelError, ParseError, PixelOutOfRangeError
from .linalg import ImageTensor


@dataclass(frozen=True)
class LabeledSample:
    x: ImageTensor
    y: int


@dataclass(frozen=True)
class Dataset:
    name: str
    num_classes: int
    shape: tuple[int, int, int]
    samples: tuple[LabeledSample, ...]

    @property
    def input_dim(self) -> int:
        c, h, w = self.shape
        return c * h * w

    def __len__(self) -> int:
        return len(self.samples)


def load_dataset(path) -> Dataset:
    """Parse a JSONL dataset file, rejecting out-of-range pixels and labels."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty dataset file")

    def parse_line(text, lineno):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if not isinstance(obj, dict):
            raise ParseError(f"{path}:{lineno}: expected an object")
        return obj

    header = parse_line(lines[0], 1)
    for field in ("name", "num_classes", "shape"):
        if field not in header:
            raise ParseError(f"{path}:1: header missing field '{field}'")
    shape = tuple(int(s) for s in header["shape"])
    if len(shape) != 3 or any(s < 1 for s in shape):
        raise ParseError(f"{path}:1: shape must be [C, H, W] with positive dims")
    num_classes = int(header["num_classes"])
    if num_classes < 2:
        raise ParseError(f"{path}:1: num_classes must be >= 2")
    dim = shape[0] * shape[1] * shape[2]

    samples = []
    for lineno, text in enumerate(lines[1:], start=2):
        obj = parse_line(text, lineno)
        if "x" not in obj or "y" not in obj:
            raise ParseError(f"{path}:{lineno}: sample missing 'x' or 'y'")
        x = np.asarray(obj["x"], dtype=np.float64)
        if x.size != dim:
            raise ParseError(f"{path}:{lineno}: x has length {x.size}, expected {dim}")
        if (x < 0.0).any() or (x > 1.0).any() or not np.isfinite(x).all():
            raise PixelOutOfRangeError(f"{path}:{lineno}: pixel outside [0, 1]")
        y = int(obj["y"])
        if not 0 <= y < num_classes:
            raise InvalidLabelError(f"{path}:{lineno}: label {y} outside [0, {num_classes})")
        samples.append(LabeledSample(ImageTensor(x, shape), y))
    if not samples:
        raise ParseError(f"{path}: no samples after header")
    return Dataset(
        name=str(header["name"]), num_classes=num_classes, shape=shape,
        samples=tuple(samples),
    )
