"""Attack engine: iterative sign-gradient base attacks (plain, momentum,
input-diversity), the gradient-averaging ensemble baseline, and the full
consensus + dual-weighting method with its component toggles.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .consensus import build_gradient_matrix, cgrads_step, consensus_from_matrix
from .errors import ConfigError, LengthMismatchError, RemoteFailureError
from .linalg import DEFAULT_EPS_STAB, ImageTensor, clip_project
from .weighting import (
    INTER,
    INTRA,
    WeightVector,
    intra_weights,
    inter_weights,
    uniform_weights,
)

EPSILON_DEFAULT = 8.0 / 255.0

BASES = ("ifgsm", "mifgsm", "difgsm")
METHODS = ("ens", "heat")


@dataclass(frozen=True)
class Toggles:
    """Feature switches for the combined method: consensus direction (A),
    coherence weights (B), loss factor (C), alignment factor (D)."""

    cgrads: bool = True
    intra: bool = True
    loss_factor: bool = True
    align_factor: bool = True

    @classmethod
    def none(cls) -> "Toggles":
        return cls(False, False, False, False)


@dataclass(frozen=True)
class AttackConfig:
    epsilon: float = EPSILON_DEFAULT
    alpha: float | None = None  # defaults to epsilon / 10
    iterations: int = 10
    contribution_ratio: float = 0.7
    tau: float = 1.0
    eps_stab: float = DEFAULT_EPS_STAB
    base: str = "ifgsm"
    method: str = "heat"
    momentum: float = 0.9
    resize_rate: float = 0.9
    diversity_prob: float = 0.5
    toggles: Toggles = field(default_factory=Toggles)
    random_init: bool = False
    row_normalize: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", self.epsilon / 10.0)
        self.validate()

    def validate(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.alpha > self.epsilon:
            raise ConfigError(f"alpha must be <= epsilon, got alpha={self.alpha}")
        if self.alpha < 0.0 or (self.epsilon > 0.0 and self.alpha == 0.0):
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if not 0.0 < self.contribution_ratio <= 1.0:
            raise ConfigError(
                f"contribution_ratio must be in (0, 1], got {self.contribution_ratio}"
            )
        if not self.tau > 0.0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if not self.eps_stab > 0.0:
            raise ConfigError(f"eps_stab must be > 0, got {self.eps_stab}")
        if self.base not in BASES:
            raise ConfigError(f"base must be one of {BASES}, got '{self.base}'")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got '{self.method}'")
        if self.momentum < 0.0:
            raise ConfigError(f"momentum must be >= 0, got {self.momentum}")
        if not 0.0 < self.resize_rate <= 1.0:
            raise ConfigError(f"resize_rate must be in (0, 1], got {self.resize_rate}")
        if not 0.0 <= self.diversity_prob <= 1.0:
            raise ConfigError(f"diversity_prob must be in [0, 1], got {self.diversity_prob}")


@dataclass(frozen=True)
class StepDiagnostics:
    w_intra: WeightVector
    w_inter: WeightVector
    k: int | None
    retained_ratio: float | None


@dataclass
class AttackResult:
    x_adv: ImageTensor
    per_iteration: list[StepDiagnostics]
    success_per_target: dict[str, bool] = field(default_factory=dict)
    error: str | None = None


def per_sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    """Generator derived from (campaign seed, sample index); parallel and
    serial execution of a campaign therefore draw identical streams."""
    return np.random.default_rng([int(seed), int(sample_index)])


def ens_gradient(models, x: ImageTensor, y: int, grad_fn=None) -> np.ndarray:
    """Plain average of the per-model input gradients at (x, y)."""
    grads = build_gradient_matrix(models, x, y, grad_fn=grad_fn)
    return grads.mean(axis=0)


def combine_gradient(
    models, x_vk: ImageTensor, y: int, w_intra: WeightVector, w_inter: WeightVector,
    grads: np.ndarray | None = None, grad_fn=None,
) -> np.ndarray:
    """Sum of w_intra[m] * w_inter[m] * grad_m evaluated at the consensus
    example. grads may supply the per-model gradients already stacked."""
    models = list(models)
    if len(w_intra) != len(models) or len(w_inter) != len(models):
        raise LengthMismatchError(
            f"weights ({len(w_intra)}, {len(w_inter)}) vs {len(models)} models"
        )
    if grads is None:
        grads = build_gradient_matrix(models, x_vk, y, grad_fn=grad_fn)
    coeffs = w_intra.weights * w_inter.weights
    return coeffs @ grads


def momentum_update(
    g_accum: np.ndarray, g: np.ndarray, mu: float, eps_stab: float = DEFAULT_EPS_STAB
) -> np.ndarray:
    """mu * g_accum + g / ||g||_1; a (numerically) zero g contributes nothing."""
    g_accum = np.asarray(g_accum, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if g_accum.shape != g.shape:
        raise LengthMismatchError(f"shapes differ: {g_accum.shape} vs {g.shape}")
    if mu < 0.0:
        raise ValueError("mu must be >= 0")
    norm = float(np.abs(g).sum())
    if norm <= eps_stab:
        return mu * g_accum
    return mu * g_accum + g / norm


def input_diversity(
    x: ImageTensor, resize_rate: float, prob: float, rng: np.random.Generator
) -> ImageTensor:
    """Random resize-and-pad transform: with the given probability, bilinearly
    shrink to a uniformly drawn square side in [round(resize_rate*H), H] and
    zero-pad back at a uniform offset. Draw order (gate, side, top, left) is
    fixed, so the output is a pure function of the rng state."""
    if not 0.0 < resize_rate <= 1.0:
        raise ValueError("resize_rate must be in (0, 1]")
    if prob <= 0.0 or rng.random() >= prob:
        return x
    _, h, w = x.shape
    lo = max(1, round(resize_rate * h))
    side = int(rng.integers(lo, h + 1))
    top = int(rng.integers(0, h - side + 1))
    left = int(rng.integers(0, w - side + 1))
    out = kernels.bilinear_resize_pad(x.as_chw(), side, top, left)
    return ImageTensor(out.ravel(), x.shape)


def _make_grad_fn(cfg: AttackConfig, rng: np.random.Generator | None):
    """Gradient evaluator; for the diversity base each evaluation transforms
    its anchor with a fresh draw."""
    if cfg.base != "difgsm":
        return None
    if rng is None:
        raise ConfigError("difgsm requires a random generator")

    def grad_fn(model, x, y):
        return model.loss_and_input_grad(
            input_diversity(x, cfg.resize_rate, cfg.diversity_prob, rng), y
        )

    return grad_fn


def _eval_ensemble(models, x, y, grad_fn):
    """Per-model (losses, stacked gradients) at one anchor, one evaluation each."""
    if grad_fn is None:
        pairs = [m.loss_and_input_grad(x, y) for m in models]
    else:
        pairs = [grad_fn(m, x, y) for m in models]
    losses = [p[0] for p in pairs]
    grads = np.stack([p[1] for p in pairs])
    return losses, grads


def heat_gradient(
    models, x_iter: ImageTensor, x_orig: ImageTensor, y: int, cfg: AttackConfig,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, StepDiagnostics]:
    """One full pass of the combined method anchored at the current iterate:
    consensus example, coherence weights, divergence weights, and the final
    weighted gradient. Disabled components degrade per their toggle:
    A off -> the consensus example is the iterate itself; B off -> uniform
    intra weights; C/D off -> the corresponding factor is uniform."""
    models = list(models)
    m_count = len(models)
    toggles = cfg.toggles
    grad_fn = _make_grad_fn(cfg, rng)

    losses_iter, grads_iter = _eval_ensemble(models, x_iter, y, grad_fn)

    if toggles.cgrads:
        direction = consensus_from_matrix(
            grads_iter, cfg.contribution_ratio, cfg.row_normalize, cfg.eps_stab
        )
        x_vk = cgrads_step(x_iter, x_orig, direction, cfg.alpha, cfg.epsilon)
        k, retained = direction.k, direction.retained_ratio
        losses_vk, grads_vk = _eval_ensemble(models, x_vk, y, grad_fn)
    else:
        x_vk = x_iter
        k, retained = None, None
        losses_vk, grads_vk = losses_iter, grads_iter

    if toggles.intra and m_count > 1:
        w_intra = intra_weights(
            models, x_iter, x_orig, y, cfg.alpha, cfg.epsilon, cfg.eps_stab,
            grads=grads_iter,
        )
    else:
        w_intra = uniform_weights(m_count, INTRA)

    if m_count > 1 and (toggles.loss_factor or toggles.align_factor):
        w_inter, _ = inter_weights(
            models, x_vk, y, cfg.tau, cfg.eps_stab,
            use_loss=toggles.loss_factor, use_align=toggles.align_factor,
            grads=grads_vk, losses=losses_vk,
        )
    else:
        w_inter = uniform_weights(m_count, INTER)

    g = combine_gradient(models, x_vk, y, w_intra, w_inter, grads=grads_vk)
    return g, StepDiagnostics(w_intra, w_inter, k, retained)


def heat_step(
    models, x_iter: ImageTensor, x_orig: ImageTensor, y: int, cfg: AttackConfig,
    rng: np.random.Generator | None = None,
) -> tuple[ImageTensor, StepDiagnostics]:
    """One combined-method update from x_iter, projected into the epsilon-ball
    of x_orig."""
    g, diag = heat_gradient(models, x_iter, x_orig, y, cfg, rng)
    out = kernels.step_project(x_iter.data, g, cfg.alpha, x_orig.data, cfg.epsilon)
    return ImageTensor(out, x_iter.shape), diag


def _check_feasible(x: ImageTensor, x_orig: ImageTensor, epsilon: float) -> None:
    delta = float(np.abs(x.data - x_orig.data).max())
    if delta > epsilon + 1e-12 or not x.in_unit_range():
        raise AssertionError(
            f"iterate violates feasibility: max|delta|={delta}, eps={epsilon}"
        )


def run_attack(models, sample, cfg: AttackConfig, sample_index: int = 0) -> AttackResult:
    """Run the configured attack for one labeled sample.

    Fully deterministic given (cfg.seed, sample_index). Feasibility (the
    epsilon-ball and pixel range) is asserted after every iteration. A
    remote-provider failure aborts the sample: the clean image is returned
    with the error recorded.
    """
    models = list(models)
    x_orig = sample.x
    y = sample.y
    rng = per_sample_rng(cfg.seed, sample_index)

    x = x_orig
    if cfg.random_init and cfg.epsilon > 0.0:
        noise = rng.uniform(-cfg.epsilon / 2.0, cfg.epsilon / 2.0, x_orig.dim)
        x = clip_project(ImageTensor(x_orig.data + noise, x_orig.shape), x_orig, cfg.epsilon)

    g_accum = np.zeros(x_orig.dim)
    diags: list[StepDiagnostics] = []
    try:
        for _ in range(cfg.iterations):
            if cfg.method == "heat":
                g, diag = heat_gradient(models, x, x_orig, y, cfg, rng)
                diags.append(diag)
            else:
                g = ens_gradient(models, x, y, grad_fn=_make_grad_fn(cfg, rng))
            if cfg.base == "mifgsm":
                g_accum = momentum_update(g_accum, g, cfg.momentum, cfg.eps_stab)
                direction = g_accum
            else:
                direction = g
            x = ImageTensor(
                kernels.step_project(x.data, direction, cfg.alpha, x_orig.data, cfg.epsilon),
                x.shape,
            )
            _check_feasible(x, x_orig, cfg.epsilon)
    except RemoteFailureError as exc:
        return AttackResult(
            x_adv=x_orig, per_iteration=diags, error=f"remote failure: {exc}"
        )
    return AttackResult(x_adv=x, per_iteration=diags)
