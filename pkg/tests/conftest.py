import sys
from pathlib import Path

import pytest

import heatbench as hb

ROOT = Path(__file__).resolve().parent.parent
ZOO = ROOT / "zoo"
FIXTURES = ROOT / "fixtures"
CONFIGS = ROOT / "configs"

SURROGATE_NAMES = ("linear_a", "linear_b", "mlp_a", "mlp_b")
TARGET_NAMES = ("target_a", "target_b", "target_c", "target_d")

sys.path.insert(0, str(Path(__file__).parent))  # for reference_impl


@pytest.fixture(scope="session")
def dataset():
    return hb.load_dataset(FIXTURES / "blobs64.jsonl")


@pytest.fixture(scope="session")
def surrogates():
    return [hb.load_model(ZOO / f"{name}.json") for name in SURROGATE_NAMES]


@pytest.fixture(scope="session")
def targets():
    return [hb.load_model(ZOO / f"{name}.json") for name in TARGET_NAMES]


@pytest.fixture(scope="session")
def zoo_models(surrogates, targets):
    return list(surrogates) + list(targets)


def provider_command(model_path) -> list[str]:
    return [sys.executable, "-m", "gradprovider", "--model", str(model_path)]
