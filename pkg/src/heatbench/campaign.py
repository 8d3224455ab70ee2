"""Campaign orchestration: run attack cells over a dataset, score black-box
attack success rates, and emit CSV/Markdown reports plus the per-sample
success matrix.

A sample counts toward a target's ASR denominator only if the target
classifies the clean image correctly; it counts as a success if the target
then misclassifies the adversarial image.
"""

import csv
import io
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import BenchmarkConfig, load_benchmark_config
from .data import Dataset, load_dataset
from .engine import AttackConfig, AttackResult, Toggles, run_attack
from .errors import ConfigError, EnsembleMismatchError
from .models import Classifier, load_model

# Ablation rows: which feature toggles are active, in presentation order.
ABLATION_ROWS = (
    ("none", Toggles(False, False, False, False)),
    ("A", Toggles(True, False, False, False)),
    ("A+B", Toggles(True, True, False, False)),
    ("A+B+C", Toggles(True, True, True, False)),
    ("A+B+D", Toggles(True, True, False, True)),
    ("A+B+C+D", Toggles(True, True, True, True)),
)


@dataclass
class MethodRow:
    label: str
    method: str
    base: str
    asr: dict[str, float | None]  # target name -> percentage, None = N/A
    average: float | None
    success: np.ndarray  # (num_samples, num_targets) bool
    toggles: Toggles | None = None
    wall_clock: float = 0.0


@dataclass
class CampaignReport:
    dataset_name: str
    target_names: list[str]
    num_samples: int
    rows: list[MethodRow]
    clean_correct: np.ndarray  # (num_samples, num_targets) bool
    config_echo: dict = field(default_factory=dict)
    wall_clock_total: float = 0.0


def evaluate_asr(
    targets: list[Classifier],
    results: list[AttackResult],
    dataset: Dataset,
    label: str = "attack",
    method: str = "",
    base: str = "",
    toggles: Toggles | None = None,
) -> CampaignReport:
    """Score one result set against the target models (single-row report).

    Fills each result's success_per_target map. A target that misclassifies
    every clean sample gets ASR None ("N/A") and is excluded from the average.
    """
    samples = dataset.samples[: len(results)]
    if len(results) != len(samples):
        raise EnsembleMismatchError(
            f"{len(results)} results vs {len(samples)} samples"
        )
    n, t = len(samples), len(targets)
    clean = np.zeros((n, t), dtype=bool)
    success = np.zeros((n, t), dtype=bool)
    for j, target in enumerate(targets):
        for i, sample in enumerate(samples):
            clean[i, j] = target.predict(sample.x) == sample.y
            hit = (
                clean[i, j]
                and results[i].error is None
                and target.predict(results[i].x_adv) != sample.y
            )
            success[i, j] = hit
            results[i].success_per_target[target.name] = bool(hit)
    asr: dict[str, float | None] = {}
    for j, target in enumerate(targets):
        n_clean = int(clean[:, j].sum())
        asr[target.name] = 100.0 * int(success[:, j].sum()) / n_clean if n_clean else None
    row = MethodRow(
        label=label, method=method, base=base, asr=asr,
        average=_average(asr.values()), success=success, toggles=toggles,
    )
    return CampaignReport(
        dataset_name=dataset.name,
        target_names=[t_.name for t_ in targets],
        num_samples=n,
        rows=[row],
        clean_correct=clean,
    )


def _average(values) -> float | None:
    present = [v for v in values if v is not None]
    return sum(present) / len(present) if present else None


def run_cell(
    surrogates: list[Classifier],
    targets: list[Classifier],
    dataset: Dataset,
    cfg: AttackConfig,
    label: str,
    max_samples: int | None = None,
) -> tuple[CampaignReport, list[AttackResult]]:
    """Attack every sample with one configuration and score it."""
    samples = dataset.samples[:max_samples] if max_samples else dataset.samples
    started = time.perf_counter()
    results = [run_attack(surrogates, s, cfg, i) for i, s in enumerate(samples)]
    sub = replace(dataset, samples=samples)
    report = evaluate_asr(
        targets, results, sub, label=label, method=cfg.method, base=cfg.base,
        toggles=cfg.toggles,
    )
    report.rows[0].wall_clock = time.perf_counter() - started
    report.wall_clock_total = report.rows[0].wall_clock
    return report, results


def combine_reports(reports: list[CampaignReport]) -> CampaignReport:
    first = reports[0]
    out = CampaignReport(
        dataset_name=first.dataset_name,
        target_names=first.target_names,
        num_samples=first.num_samples,
        rows=[row for rep in reports for row in rep.rows],
        clean_correct=first.clean_correct,
        config_echo=dict(first.config_echo),
        wall_clock_total=sum(rep.wall_clock_total for rep in reports),
    )
    return out


def _load_ensemble(paths) -> list[Classifier]:
    return [load_model(p) for p in paths]


def _config_echo(bench: BenchmarkConfig, seed: int, ablation: bool) -> dict:
    atk = bench.attack
    echo = {
        "dataset": str(bench.dataset_path),
        "surrogates": [str(p) for p in bench.surrogate_paths],
        "targets": [str(p) for p in bench.target_paths],
        "methods": list(bench.methods),
        "bases": list(bench.bases),
        "seed": seed,
        "epsilon": atk.epsilon,
        "alpha": atk.alpha,
        "iterations": atk.iterations,
        "contribution_ratio": atk.contribution_ratio,
        "tau": atk.tau,
        "eps_stab": atk.eps_stab,
        "momentum": atk.momentum,
        "resize_rate": atk.resize_rate,
        "diversity_prob": atk.diversity_prob,
        "random_init": atk.random_init,
        "row_normalize": atk.row_normalize,
        "max_samples": bench.max_samples,
        "ablation": ablation,
    }
    return echo


def run_benchmark(
    config_path,
    seed: int,
    out_dir=None,
    overrides: dict | None = None,
    ablation: bool = False,
) -> CampaignReport:
    """Run every requested (method, base) cell of a campaign config; with
    ablation=True run the 6-row toggle sweep instead. Writes report.csv,
    report.md, and matrix.csv when out_dir is given. Deterministic given seed.
    """
    bench = load_benchmark_config(config_path, overrides)
    dataset = load_dataset(bench.dataset_path)
    surrogates = _load_ensemble(bench.surrogate_paths)
    targets = _load_ensemble(bench.target_paths)
    for model in surrogates + targets:
        if model.input_dim != dataset.input_dim or model.num_classes != dataset.num_classes:
            raise ConfigError(
                f"model {model.name} ({model.input_dim}, {model.num_classes}) does not "
                f"match dataset ({dataset.input_dim}, {dataset.num_classes})"
            )

    cells: list[tuple[str, AttackConfig]] = []
    if ablation:
        for label, toggles in ABLATION_ROWS:
            cfg = replace(bench.attack, method="heat", toggles=toggles, seed=seed)
            cells.append((label, cfg))
    else:
        for method in bench.methods:
            for base in bench.bases:
                cfg = replace(bench.attack, method=method, base=base, seed=seed)
                cells.append((f"{method}+{base}", cfg))

    reports = []
    for label, cfg in cells:
        report, _ = run_cell(surrogates, targets, dataset, cfg, label, bench.max_samples)
        reports.append(report)
    combined = combine_reports(reports)
    combined.config_echo = _config_echo(bench, seed, ablation)

    if out_dir is not None:
        write_report(combined, out_dir, ablation=ablation)
    return combined


# ---------------------------------------------------------------------------
# Report rendering


def _fmt(value: float | None) -> str:
    return "N/A" if value is None else repr(value)


def render_csv(report: CampaignReport, ablation: bool = False) -> str:
    """Machine CSV: full-precision ASR percentages, one row per cell."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    toggle_cols = ["A", "B", "C", "D"] if ablation else []
    writer.writerow(["method", *toggle_cols, *report.target_names, "Average"])
    for row in report.rows:
        toggle_vals = []
        if ablation:
            tg = row.toggles or Toggles()
            toggle_vals = [
                int(tg.cgrads), int(tg.intra), int(tg.loss_factor), int(tg.align_factor)
            ]
        writer.writerow(
            [row.label, *toggle_vals]
            + [_fmt(row.asr[t]) for t in report.target_names]
            + [_fmt(row.average)]
        )
    return buf.getvalue()


def render_matrix_csv(report: CampaignReport) -> str:
    """Per-sample success matrix; ASR entries are recomputable from it."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "sample", "target", "clean_correct", "success"])
    for row in report.rows:
        for i in range(report.num_samples):
            for j, target in enumerate(report.target_names):
                writer.writerow(
                    [row.label, i, target,
                     int(report.clean_correct[i, j]), int(row.success[i, j])]
                )
    return buf.getvalue()


def _fmt_pct(value: float | None) -> str:
    return "N/A" if value is None else f"{value:.2f}"


def render_markdown(report: CampaignReport, include_meta: bool = True) -> str:
    """Human table: targets as columns, methods as rows, trailing average."""
    lines = [f"# Campaign report: {report.dataset_name}", ""]
    header = ["method", *report.target_names, "Average"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join(["---"] * len(header)) + "|")
    for row in report.rows:
        cells = [row.label] + [_fmt_pct(row.asr[t]) for t in report.target_names]
        cells.append(_fmt_pct(row.average))
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    if include_meta:
        if report.config_echo:
            lines.append("## Configuration")
            lines.append("")
            for key, value in report.config_echo.items():
                lines.append(f"- {key}: {value}")
            lines.append("")
        lines.append(
            f"Samples: {report.num_samples}; wall clock: "
            f"{report.wall_clock_total:.2f}s ("
            + ", ".join(f"{r.label} {r.wall_clock:.2f}s" for r in report.rows)
            + ")"
        )
        lines.append("")
    return "\n".join(lines)


def write_report(report: CampaignReport, out_dir, ablation: bool = False) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out_dir / "report.csv",
        "md": out_dir / "report.md",
        "matrix": out_dir / "matrix.csv",
    }
    paths["csv"].write_text(render_csv(report, ablation=ablation))
    paths["md"].write_text(render_markdown(report))
    paths["matrix"].write_text(render_matrix_csv(report))
    return paths


def markdown_from_csv(csv_path) -> str:
    """Re-render an emitted report.csv as the Markdown table."""
    rows = list(csv.reader(Path(csv_path).read_text().splitlines()))
    if not rows or rows[0][-1] != "Average":
        raise ConfigError(f"{csv_path}: not a campaign report CSV")
    header, body = rows[0], rows[1:]
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join(["---"] * len(header)) + "|")
    for row in body:
        cells = [row[0]]
        for value in row[1:]:
            if value.isdigit():  # ablation toggle flags stay integral
                cells.append(value)
                continue
            try:
                cells.append(f"{float(value):.2f}")
            except ValueError:
                cells.append(value)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
