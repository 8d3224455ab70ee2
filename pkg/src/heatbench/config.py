"""TOML campaign configuration: attack hyperparameters plus model/dataset
paths and the target list. Paths are resolved relative to the config file.
"""

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .engine import AttackConfig, BASES, METHODS, Toggles
from .errors import ConfigError

_ATTACK_FIELDS = {
    "epsilon": float,
    "alpha": float,
    "iterations": int,
    "contribution_ratio": float,
    "tau": float,
    "eps_stab": float,
    "base": str,
    "momentum": float,
    "resize_rate": float,
    "diversity_prob": float,
    "random_init": bool,
    "row_normalize": bool,
}

_TOGGLE_FIELDS = ("cgrads", "intra", "loss_factor", "align_factor")


@dataclass(frozen=True)
class BenchmarkConfig:
    dataset_path: Path
    surrogate_paths: tuple[Path, ...]
    target_paths: tuple[Path, ...]
    methods: tuple[str, ...]
    bases: tuple[str, ...]
    attack: AttackConfig  # template; method/base/seed are set per campaign cell
    max_samples: int | None


def _reject_unknown(table: dict, allowed, where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {unknown}")


def _coerce(value, target, field: str):
    if target is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{field} must be a boolean, got {value!r}")
        return value
    if target is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{field} must be a number, got {value!r}")
        return float(value)
    if target is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{field} must be an integer, got {value!r}")
        return int(value)
    if not isinstance(value, str):
        raise ConfigError(f"{field} must be a string, got {value!r}")
    return value


def load_benchmark_config(path, overrides: dict | None = None) -> BenchmarkConfig:
    """Parse and validate a campaign config; `overrides` (CLI flags) replace
    the corresponding attack/campaign fields before validation."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    _reject_unknown(raw, ("dataset", "models", "campaign", "attack"), str(path))
    base_dir = path.parent
    overrides = dict(overrides or {})

    dataset_tbl = raw.get("dataset", {})
    _reject_unknown(dataset_tbl, ("path",), "dataset")
    if "path" not in dataset_tbl:
        raise ConfigError("dataset.path is required")
    dataset_path = (base_dir / dataset_tbl["path"]).resolve()

    models_tbl = raw.get("models", {})
    _reject_unknown(models_tbl, ("surrogates", "targets"), "models")
    for field in ("surrogates", "targets"):
        if field not in models_tbl or not models_tbl[field]:
            raise ConfigError(f"models.{field} must list at least one model file")
    surrogates = tuple((base_dir / p).resolve() for p in models_tbl["surrogates"])
    targets = tuple((base_dir / p).resolve() for p in models_tbl["targets"])

    campaign_tbl = dict(raw.get("campaign", {}))
    _reject_unknown(campaign_tbl, ("methods", "bases", "max_samples"), "campaign")
    methods = tuple(overrides.pop("methods", None) or campaign_tbl.get("methods", ("ens", "heat")))
    bases = tuple(overrides.pop("bases", None) or campaign_tbl.get("bases", ("ifgsm",)))
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"campaign.methods: unknown method '{m}'")
    for b in bases:
        if b not in BASES:
            raise ConfigError(f"campaign.bases: unknown base '{b}'")
    max_samples = overrides.pop("max_samples", None)
    if max_samples is None:
        max_samples = campaign_tbl.get("max_samples")
    if max_samples is not None:
        max_samples = int(max_samples)
        if max_samples < 1:
            raise ConfigError(f"max_samples must be >= 1, got {max_samples}")

    attack_tbl = dict(raw.get("attack", {}))
    toggles_tbl = attack_tbl.pop("toggles", {})
    _reject_unknown(attack_tbl, _ATTACK_FIELDS, "attack")
    _reject_unknown(toggles_tbl, _TOGGLE_FIELDS, "attack.toggles")

    kwargs = {}
    for field, target in _ATTACK_FIELDS.items():
        if field in overrides and overrides[field] is not None:
            kwargs[field] = _coerce(overrides.pop(field), target, f"attack.{field}")
        elif field in attack_tbl:
            kwargs[field] = _coerce(attack_tbl[field], target, f"attack.{field}")
    toggle_kwargs = {
        name: _coerce(toggles_tbl[name], bool, f"attack.toggles.{name}")
        for name in _TOGGLE_FIELDS
        if name in toggles_tbl
    }
    if toggle_kwargs:
        kwargs["toggles"] = Toggles(**toggle_kwargs)
    unknown_overrides = {k: v for k, v in overrides.items() if v is not None}
    if unknown_overrides:
        raise ConfigError(f"unknown override field(s) {sorted(unknown_overrides)}")

    attack = AttackConfig(**kwargs)
    return BenchmarkConfig(
        dataset_path=dataset_path,
        surrogate_paths=surrogates,
        target_paths=targets,
        methods=methods,
        bases=bases,
        attack=attack,
        max_samples=max_samples,
    )
