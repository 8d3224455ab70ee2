"""Ensemble transfer-attack benchmark.

Core pieces: deterministic linear algebra (thin SVD via the Gram matrix),
a tiny exact-gradient model zoo, consensus gradient-direction synthesis,
dual adaptive model weighting, the attack engine, and a campaign harness
with CSV/Markdown reporting. Hot kernels run under numba unless
HEATBENCH_PURE_NUMPY=1 selects the pure-numpy fallback.
"""

from .campaign import (
    CampaignReport,
    MethodRow,
    evaluate_asr,
    run_benchmark,
    run_cell,
)
from .config import BenchmarkConfig, load_benchmark_config
from .consensus import (
    ConsensusDirection,
    build_gradient_matrix,
    cgrads_step,
    consensus_from_matrix,
    select_rank,
    synthesize_direction,
)
from .data import Dataset, LabeledSample, load_dataset
from .engine import (
    AttackConfig,
    AttackResult,
    StepDiagnostics,
    Toggles,
    ens_gradient,
    combine_gradient,
    heat_gradient,
    heat_step,
    input_diversity,
    momentum_update,
    run_attack,
)
from .kernels import BACKEND
from .linalg import (
    ImageTensor,
    SvdFactors,
    clip_project,
    cosine_similarity,
    sign_step,
    thin_svd,
)
from .models import (
    Classifier,
    LinearSoftmaxClassifier,
    MlpClassifier,
    finite_diff_grad,
    load_model,
)
from .remote import RemoteClassifier, connect_provider
from .weighting import (
    ContributionProfile,
    WeightVector,
    alignment_contributions,
    entropy_weights,
    inter_weights,
    intra_weights,
    loss_contributions,
    temperature_normalize,
)

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackResult",
    "BACKEND",
    "BenchmarkConfig",
    "CampaignReport",
    "Classifier",
    "ConsensusDirection",
    "ContributionProfile",
    "Dataset",
    "ImageTensor",
    "LabeledSample",
    "LinearSoftmaxClassifier",
    "MethodRow",
    "MlpClassifier",
    "RemoteClassifier",
    "StepDiagnostics",
    "SvdFactors",
    "Toggles",
    "WeightVector",
    "alignment_contributions",
    "build_gradient_matrix",
    "cgrads_step",
    "clip_project",
    "combine_gradient",
    "connect_provider",
    "consensus_from_matrix",
    "cosine_similarity",
    "ens_gradient",
    "entropy_weights",
    "evaluate_asr",
    "finite_diff_grad",
    "heat_gradient",
    "heat_step",
    "input_diversity",
    "inter_weights",
    "intra_weights",
    "load_benchmark_config",
    "load_dataset",
    "load_model",
    "loss_contributions",
    "momentum_update",
    "run_attack",
    "run_benchmark",
    "run_cell",
    "select_rank",
    "sign_step",
    "synthesize_direction",
    "temperature_normalize",
    "thin_svd",
]
