"""Command-line interface: `attack` runs a campaign, `ablate` the component
toggle sweep, `gradcheck` the finite-difference audit of model files, and
`report` re-renders an emitted CSV as Markdown.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .campaign import markdown_from_csv, render_markdown, run_benchmark
from .errors import HeatbenchError
from .linalg import ImageTensor
from .models import finite_diff_grad, load_model

GRADCHECK_TOLERANCE = 1e-6


def _add_campaign_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="campaign TOML file")
    parser.add_argument("--seed", required=True, type=int, help="campaign RNG seed")
    parser.add_argument("--out", default="reports", help="artifact output directory")
    parser.add_argument("--max-samples", type=int, default=None,
                        help="attack only the first N samples")
    # attack-field overrides; unset flags fall back to the config file
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--iterations", type=int, default=None)
    parser.add_argument("--contribution-ratio", type=float, default=None,
                        dest="contribution_ratio")
    parser.add_argument("--tau", type=float, default=None)
    parser.add_argument("--eps-stab", type=float, default=None, dest="eps_stab")
    parser.add_argument("--base", choices=("ifgsm", "mifgsm", "difgsm"), default=None)
    parser.add_argument("--momentum", type=float, default=None)
    parser.add_argument("--resize-rate", type=float, default=None, dest="resize_rate")
    parser.add_argument("--diversity-prob", type=float, default=None,
                        dest="diversity_prob")
    parser.add_argument("--random-init", action="store_true", default=None,
                        dest="random_init")
    parser.add_argument("--row-normalize", action="store_true", default=None,
                        dest="row_normalize")


_OVERRIDE_FIELDS = (
    "epsilon", "alpha", "iterations", "contribution_ratio", "tau", "eps_stab",
    "base", "momentum", "resize_rate", "diversity_prob", "random_init",
    "row_normalize", "max_samples",
)


def _overrides_from_args(args) -> dict:
    out = {f: getattr(args, f) for f in _OVERRIDE_FIELDS}
    if getattr(args, "methods", None):
        out["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    return out


def _cmd_attack(args) -> int:
    report = run_benchmark(
        args.config, seed=args.seed, out_dir=args.out,
        overrides=_overrides_from_args(args),
    )
    print(render_markdown(report))
    print(f"artifacts written to {Path(args.out).resolve()}")
    return 0


def _cmd_ablate(args) -> int:
    report = run_benchmark(
        args.config, seed=args.seed, out_dir=args.out,
        overrides=_overrides_from_args(args), ablation=True,
    )
    print(render_markdown(report))
    print(f"artifacts written to {Path(args.out).resolve()}")
    return 0


def _cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    failures = 0
    started = time.perf_counter()
    for path in args.model:
        model = load_model(path)
        shape = (1, 1, model.input_dim)
        worst = 0.0
        for _ in range(args.trials):
            x = ImageTensor(rng.random(model.input_dim), shape)
            y = int(rng.integers(model.num_classes))
            _, analytic = model.loss_and_input_grad(x, y)
            numeric = finite_diff_grad(model, x, y, args.step)
            denom = max(float(np.linalg.norm(numeric)), 1e-30)
            rel = float(np.linalg.norm(analytic - numeric)) / denom
            worst = max(worst, rel)
        ok = worst <= GRADCHECK_TOLERANCE
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'} {model.name}: "
              f"max relative L2 error {worst:.3e} over {args.trials} trials")
    print(f"gradcheck finished in {time.perf_counter() - started:.1f}s")
    return 1 if failures else 0


def _cmd_report(args) -> int:
    markdown = markdown_from_csv(args.csv)
    if args.out:
        Path(args.out).write_text(markdown)
        print(f"wrote {args.out}")
    else:
        print(markdown)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatbench",
        description="Ensemble transfer-attack benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="run a campaign from a TOML config")
    _add_campaign_flags(p_attack)
    p_attack.add_argument("--methods", default=None,
                          help="comma-separated subset, e.g. 'ens,heat'")
    p_attack.set_defaults(func=_cmd_attack)

    p_ablate = sub.add_parser("ablate", help="run the component toggle sweep")
    _add_campaign_flags(p_ablate)
    p_ablate.set_defaults(func=_cmd_ablate)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p_grad.add_argument("--model", action="append", required=True,
                        help="model JSON file (repeatable)")
    p_grad.add_argument("--trials", type=int, default=50)
    p_grad.add_argument("--step", type=float, default=1e-5)
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=_cmd_gradcheck)

    p_report = sub.add_parser("report", help="re-render report.csv as Markdown")
    p_report.add_argument("--csv", required=True)
    p_report.add_argument("--out", default=None)
    p_report.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HeatbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
