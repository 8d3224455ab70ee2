"""Deterministic numerical primitives: thin SVD, cosine similarity, sign steps,
box projection. All math is float64; gradient matrices are plain (M, D) arrays.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NotFiniteError, ShapeMismatchError, ZeroVectorError

DEFAULT_EPS_STAB = 1e-8

# Singular values at or below sigma_1 * RANK_CUTOFF are treated as numerical
# zeros. The Gram route squares the spectrum, so rounding in G G^T floors
# spurious singular values near sigma_1 * sqrt(machine eps) ~ 1.5e-8 sigma_1;
# keeping them would yield right vectors that are far from unit norm, while
# dropping them costs only machine-level reconstruction error.
RANK_CUTOFF = 1e-7


@dataclass(frozen=True)
class ImageTensor:
    """A flat float64 pixel vector plus (channels, height, width) metadata.

    At-rest images (dataset samples, attack outputs) have every value in
    [0, 1]; intermediate pre-projection tensors produced by sign_step may
    leave that range and are always composed with clip_project.
    """

    data: np.ndarray
    shape: tuple[int, int, int]

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64).ravel()
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        c, h, w = self.shape
        if c < 1 or h < 1 or w < 1 or arr.size != c * h * w:
            raise ShapeMismatchError(
                f"data length {arr.size} does not match shape {self.shape}"
            )
        if not np.isfinite(arr).all():
            raise NotFiniteError("image contains NaN or Inf")

    @property
    def dim(self) -> int:
        return self.data.size

    def in_unit_range(self, tol: float = 0.0) -> bool:
        return bool((self.data >= -tol).all() and (self.data <= 1.0 + tol).all())

    def as_chw(self) -> np.ndarray:
        return self.data.reshape(self.shape)


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD factors: descending positive singular values, right/left
    singular vectors as columns. Numerically-zero singular values are dropped,
    so rank may be less than min(M, D)."""

    singular_values: np.ndarray  # (r,)
    right_vectors: np.ndarray  # (D, r)
    left_vectors: np.ndarray  # (M, r)

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)


def cosine_similarity(a, b, eps_stab: float = DEFAULT_EPS_STAB) -> float:
    """Cosine of the angle between two vectors, clamped into [-1, 1].

    Raises ZeroVectorError when either norm is <= eps_stab; callers that
    aggregate similarities substitute 0 for such degenerate pairs.
    """
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    if av.size != bv.size:
        raise ShapeMismatchError(f"vector lengths differ: {av.size} vs {bv.size}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na <= eps_stab or nb <= eps_stab:
        raise ZeroVectorError("cosine undefined for (numerically) zero vector")
    value = float(np.dot(av, bv) / (na * nb))
    return min(1.0, max(-1.0, value))


def thin_svd(matrix: np.ndarray) -> SvdFactors:
    """Thin SVD of an (M, D) matrix with M << D, via the M x M Gram matrix.

    The Gram eigenproblem is solved with cyclic Jacobi; right vectors are
    recovered as G^T u_i / sigma_i. A deterministic sign convention is
    applied per component: flip (u_i, v_i) jointly so sum(u_i) >= 0, breaking
    near-zero sums (|sum| <= 1e-12) by the sign of u_i's largest-magnitude
    entry. Singular values <= sigma_1 * 1e-12 are dropped.
    """
    g = np.ascontiguousarray(matrix, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
        raise ShapeMismatchError(f"expected a 2-D matrix, got shape {g.shape}")
    if not np.isfinite(g).all():
        raise NotFiniteError("gradient matrix contains NaN or Inf")
    m, d = g.shape

    # Pairwise dot products keep the Gram matrix exactly symmetric and make
    # its entries independent of row order.
    gram = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            v = float(np.dot(g[i], g[j]))
            gram[i, j] = v
            gram[j, i] = v

    evals, evecs = kernels.jacobi_eigh(gram)
    sigma = np.sqrt(np.maximum(evals, 0.0))
    if sigma[0] <= 0.0:
        return SvdFactors(np.zeros(0), np.zeros((d, 0)), np.zeros((m, 0)))
    rank = int(np.count_nonzero(sigma > sigma[0] * RANK_CUTOFF))
    values = sigma[:rank].copy()
    left = np.ascontiguousarray(evecs[:, :rank])
    right = np.dot(g.T, left) / values

    for i in range(rank):
        u = left[:, i]
        total = math.fsum(u.tolist())
        if total < -1e-12:
            flip = True
        elif total <= 1e-12:
            flip = bool(u[int(np.argmax(np.abs(u)))] < 0.0)
        else:
            flip = False
        if flip:
            left[:, i] = -left[:, i]
            right[:, i] = -right[:, i]

    return SvdFactors(values, right, left)


def reconstruct(factors: SvdFactors) -> np.ndarray:
    """Sum of sigma_i * u_i v_i^T; used by tests against the source matrix."""
    return (factors.left_vectors * factors.singular_values) @ factors.right_vectors.T


def clip_project(x_adv: ImageTensor, x_orig: ImageTensor, epsilon: float) -> ImageTensor:
    """Project into the epsilon-ball of x_orig intersected with [0, 1]^D."""
    if x_adv.shape != x_orig.shape:
        raise ShapeMismatchError(f"shapes differ: {x_adv.shape} vs {x_orig.shape}")
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    out = kernels.project_box(x_adv.data, x_orig.data, float(epsilon))
    return ImageTensor(out, x_adv.shape)


def sign_step(x: ImageTensor, direction, alpha: float) -> ImageTensor:
    """x + alpha * sign(direction), with sign(0) = 0. Not yet projected."""
    d = np.asarray(direction, dtype=np.float64).ravel()
    if d.size != x.dim:
        raise ShapeMismatchError(f"direction length {d.size} != image dim {x.dim}")
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")
    return ImageTensor(x.data + alpha * np.sign(d), x.shape)
