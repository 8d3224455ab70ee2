"""Consensus gradient direction: stack per-model input gradients, keep the
dominant shared subspace by cumulative singular-value mass, and synthesize a
single attack direction from it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptySpectrumError, EnsembleMismatchError, RankOutOfRangeError
from .linalg import DEFAULT_EPS_STAB, ImageTensor, SvdFactors, clip_project, sign_step, thin_svd


@dataclass(frozen=True)
class ConsensusDirection:
    """Weighted sum of the retained right singular vectors (weights = singular
    values), plus the retained rank and its cumulative mass ratio."""

    vector: np.ndarray
    k: int
    retained_ratio: float


def build_gradient_matrix(models, x: ImageTensor, y: int, grad_fn=None) -> np.ndarray:
    """Stack each model's input gradient at (x, y) row-wise into an (M, D) array.

    Gradients are raw (no normalization). grad_fn(model, x, y) -> (loss, grad)
    may replace the direct model call, e.g. to add input diversity.
    """
    models = list(models)
    if not models:
        raise EnsembleMismatchError("ensemble is empty")
    dims = {(m.input_dim, m.num_classes) for m in models}
    if len(dims) != 1:
        raise EnsembleMismatchError(f"models disagree on dimensions: {sorted(dims)}")
    if grad_fn is None:
        grad_fn = lambda model, xi, yi: model.loss_and_input_grad(xi, yi)
    out = np.empty((len(models), x.dim))
    for i, model in enumerate(models):
        _, out[i] = grad_fn(model, x, y)
    return out


def normalize_rows(matrix: np.ndarray, eps_stab: float = DEFAULT_EPS_STAB) -> np.ndarray:
    """Unit-L2 rows; rows with norm <= eps_stab are zeroed."""
    out = np.array(matrix, dtype=np.float64, copy=True)
    for i in range(out.shape[0]):
        norm = float(np.linalg.norm(out[i]))
        out[i] = out[i] / norm if norm > eps_stab else 0.0
    return out


def select_rank(singular_values, ratio: float) -> int:
    """Smallest k whose leading singular values reach the given share of the
    total mass: sum(sigma[:k]) / sum(sigma) >= ratio."""
    values = np.asarray(singular_values, dtype=np.float64)
    if values.size == 0:
        raise EmptySpectrumError("no singular values remain")
    if not 0.0 < ratio <= 1.0:
        raise ValueError("ratio must be in (0, 1]")
    shares = np.cumsum(values) / values.sum()
    # First index whose cumulative share reaches the ratio; the clamp covers
    # rounding that leaves the final share a hair under 1.0.
    k = int(np.searchsorted(shares, ratio, side="left")) + 1
    return min(k, values.size)


def synthesize_direction(factors: SvdFactors, k: int) -> ConsensusDirection:
    """Sum of sigma_i * v_i over the first k singular components."""
    if not 1 <= k <= factors.rank:
        raise RankOutOfRangeError(f"k={k} outside [1, {factors.rank}]")
    vector = factors.right_vectors[:, :k] @ factors.singular_values[:k]
    total = float(factors.singular_values.sum())
    retained = float(factors.singular_values[:k].sum()) / total
    return ConsensusDirection(vector=vector, k=k, retained_ratio=retained)


def consensus_from_matrix(
    matrix: np.ndarray, ratio: float, row_normalize: bool = False,
    eps_stab: float = DEFAULT_EPS_STAB,
) -> ConsensusDirection:
    """thin_svd + select_rank + synthesize_direction on a gradient matrix."""
    if row_normalize:
        matrix = normalize_rows(matrix, eps_stab)
    factors = thin_svd(matrix)
    if factors.rank == 0:
        raise EmptySpectrumError("gradient matrix is numerically zero")
    k = select_rank(factors.singular_values, ratio)
    return synthesize_direction(factors, k)


def cgrads_step(
    x_anchor: ImageTensor, x_orig: ImageTensor, direction: ConsensusDirection,
    alpha: float, epsilon: float,
) -> ImageTensor:
    """One sign step along the consensus direction from x_anchor, projected
    into the epsilon-ball of x_orig."""
    return clip_project(sign_step(x_anchor, direction.vector, alpha), x_orig, epsilon)
