"""Dual adaptive model weighting.

Intra weights score each model by how well a step along its own gradient
raises the other models' losses (cross-model probe losses, log-ratio form).
Inter weights score divergence on the consensus example: per-model loss
factors and gradient-alignment factors are temperature-normalized and turned
into reciprocal-entropy weights.

All cross-model reductions use math.fsum so that permuting the model list
permutes the outputs exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EnsembleTooSmallError,
    LengthMismatchError,
    NonPositiveEntryError,
    NonPositiveTauError,
    OutOfRangeEntryError,
    ZeroVectorError,
)
from .linalg import DEFAULT_EPS_STAB, ImageTensor, clip_project, cosine_similarity, sign_step

INTRA = "intra"
INTER = "inter"


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative per-model weights summing to 1."""

    weights: np.ndarray
    kind: str

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64).ravel()
        object.__setattr__(self, "weights", w)
        if self.kind not in (INTRA, INTER):
            raise ValueError(f"unknown weight kind '{self.kind}'")
        if w.size < 1:
            raise LengthMismatchError("weight vector is empty")
        if (w < 0.0).any():
            raise OutOfRangeEntryError("weights must be nonnegative")
        if abs(math.fsum(w.tolist()) - 1.0) > 1e-9:
            raise OutOfRangeEntryError("weights must sum to 1 within 1e-9")

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class ContributionProfile:
    """Diagnostics from the inter-weight computation."""

    loss_factors: np.ndarray  # per-model loss on the consensus example + eps
    align_factors: np.ndarray  # reciprocal mean gradient alignment
    loss_factors_norm: np.ndarray
    align_factors_norm: np.ndarray
    entropies: np.ndarray


def uniform_weights(m: int, kind: str) -> WeightVector:
    return WeightVector(np.full(m, 1.0 / m), kind)


def _normalized(raw, kind: str) -> WeightVector:
    total = math.fsum(raw)
    return WeightVector(np.asarray(raw) / total, kind)


def intra_weights(
    models,
    x_anchor: ImageTensor,
    x_orig: ImageTensor,
    y: int,
    alpha: float,
    epsilon: float,
    eps_stab: float = DEFAULT_EPS_STAB,
    grads: np.ndarray | None = None,
    grad_fn=None,
) -> WeightVector:
    """Cross-model coherence weights.

    For each model m, a probe example is built by stepping x_anchor along
    sign of m's gradient and projecting into the epsilon-ball of x_orig.
    m's raw weight sums log(L_j(probe_m) + eps) / (L_j(probe_j) + eps) over
    the other models j, is clamped to at least eps_stab (the log makes raw
    values negative whenever a cross loss is below 1), and normalized.

    grads may supply precomputed per-model gradients at x_anchor (rows of the
    consensus gradient matrix); otherwise they are evaluated here.
    """
    models = list(models)
    m_count = len(models)
    if m_count == 1:
        return WeightVector(np.ones(1), INTRA)
    if m_count < 1:
        raise EnsembleTooSmallError("ensemble is empty")
    if grads is None:
        if grad_fn is None:
            grad_fn = lambda model, xi, yi: model.loss_and_input_grad(xi, yi)
        grads = np.stack([grad_fn(model, x_anchor, y)[1] for model in models])

    probes = [
        clip_project(sign_step(x_anchor, grads[i], alpha), x_orig, epsilon)
        for i in range(m_count)
    ]
    # cross[i][j] = loss of model j on model i's probe
    cross = np.empty((m_count, m_count))
    for i in range(m_count):
        for j in range(m_count):
            cross[i, j] = models[j].loss(probes[i], y)

    raw = []
    for i in range(m_count):
        terms = [
            math.log(cross[i, j] + eps_stab) / (cross[j, j] + eps_stab)
            for j in range(m_count)
            if j != i
        ]
        raw.append(max(math.fsum(terms), eps_stab))
    return _normalized(raw, INTRA)


def loss_contributions(
    models, x_vk: ImageTensor, y: int, eps_stab: float = DEFAULT_EPS_STAB,
    losses=None,
) -> np.ndarray:
    """Per-model loss on the consensus example, shifted by eps_stab (> 0)."""
    if losses is None:
        losses = [model.loss(x_vk, y) for model in models]
    return np.asarray(losses, dtype=np.float64) + eps_stab


def alignment_contributions(grads: np.ndarray, eps_stab: float = DEFAULT_EPS_STAB) -> np.ndarray:
    """Reciprocal of each row's mean cosine similarity with the other rows.

    Degenerate (numerically zero) rows contribute similarity 0; a negative
    mean is floored at 0 before the reciprocal so anti-aligned models land in
    the same maximal-divergence bucket as orthogonal ones.
    """
    grads = np.asarray(grads, dtype=np.float64)
    m_count = grads.shape[0]
    if m_count < 2:
        raise EnsembleTooSmallError("alignment needs at least 2 models")
    sims = np.zeros((m_count, m_count))
    for i in range(m_count):
        for j in range(i + 1, m_count):
            try:
                sims[i, j] = cosine_similarity(grads[i], grads[j], eps_stab)
            except ZeroVectorError:
                sims[i, j] = 0.0
            sims[j, i] = sims[i, j]
    out = np.empty(m_count)
    for i in range(m_count):
        mean = math.fsum(sims[i, j] for j in range(m_count) if j != i) / (m_count - 1)
        out[i] = 1.0 / (max(mean, 0.0) + eps_stab)
    return out


def temperature_normalize(values, tau: float) -> np.ndarray:
    """Shares of the total, raised to 1/tau. Entries must be > 0; output in (0, 1]."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if (v <= 0.0).any() or not np.isfinite(v).all():
        raise NonPositiveEntryError("entries must be finite and > 0")
    if not tau > 0.0:
        raise NonPositiveTauError(f"tau must be > 0, got {tau}")
    shares = v / math.fsum(v.tolist())
    return shares ** (1.0 / tau)


def entropy_weights(
    s_norm, a_norm, eps_stab: float = DEFAULT_EPS_STAB
) -> WeightVector:
    """Reciprocal-entropy weights from the two normalized factor vectors.

    H_m = -(s ln s + a ln a) with t ln t := 0 at t = 0 (underflowed shares),
    raw weight 1/(H_m + eps_stab), then normalized.
    """
    s = np.asarray(s_norm, dtype=np.float64).ravel()
    a = np.asarray(a_norm, dtype=np.float64).ravel()
    if s.size != a.size:
        raise LengthMismatchError(f"factor lengths differ: {s.size} vs {a.size}")
    for vec in (s, a):
        if (vec < 0.0).any() or (vec > 1.0).any() or not np.isfinite(vec).all():
            raise OutOfRangeEntryError("normalized factors must lie in [0, 1]")
    entropies = -(_xlogx(s) + _xlogx(a))
    raw = 1.0 / (entropies + eps_stab)
    return _normalized(raw.tolist(), INTER)


def _xlogx(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    mask = v > 0.0
    out[mask] = v[mask] * np.log(v[mask])
    return out


def inter_weights(
    models,
    x_vk: ImageTensor,
    y: int,
    tau: float,
    eps_stab: float = DEFAULT_EPS_STAB,
    use_loss: bool = True,
    use_align: bool = True,
    grads: np.ndarray | None = None,
    losses=None,
    grad_fn=None,
) -> tuple[WeightVector, ContributionProfile]:
    """Divergence weights on the consensus example, with per-factor toggles.

    A disabled factor is replaced by a constant vector, which makes its
    normalized share uniform; with both factors disabled the weights are
    exactly uniform.
    """
    models = list(models)
    m_count = len(models)
    if grads is None or losses is None:
        if grad_fn is None:
            grad_fn = lambda model, xi, yi: model.loss_and_input_grad(xi, yi)
        pairs = [grad_fn(model, x_vk, y) for model in models]
        losses = [p[0] for p in pairs]
        grads = np.stack([p[1] for p in pairs])

    loss_f = loss_contributions(models, x_vk, y, eps_stab, losses=losses)
    align_f = alignment_contributions(grads, eps_stab) if m_count >= 2 else np.ones(1)
    s_in = loss_f if use_loss else np.ones(m_count)
    a_in = align_f if use_align else np.ones(m_count)
    s_norm = temperature_normalize(s_in, tau)
    a_norm = temperature_normalize(a_in, tau)
    if not use_loss and not use_align:
        weights = uniform_weights(m_count, INTER)
    else:
        weights = entropy_weights(s_norm, a_norm, eps_stab)
    profile = ContributionProfile(
        loss_factors=loss_f,
        align_factors=align_f,
        loss_factors_norm=s_norm,
        align_factors_norm=a_norm,
        entropies=-(_xlogx(s_norm) + _xlogx(a_norm)),
    )
    return weights, profile
