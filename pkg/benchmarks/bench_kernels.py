#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against the pure-numpy fallback.

Micro-benchmarks time both families of every hot kernel on workload-shaped
inputs (192-pixel images, 4-model Gram matrices). --end-to-end additionally
times a short campaign in fresh subprocesses, one per backend flag.

Usage: python benchmarks/bench_kernels.py [--reps 20000] [--end-to-end]
"""

import argparse
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from heatbench import kernels  # noqa: E402


def workload(rng):
    dim, hidden, classes, models = 192, 64, 10, 4
    w1 = rng.normal(size=(hidden, dim))
    b1 = rng.normal(size=hidden)
    w2 = rng.normal(size=(classes, hidden))
    b2 = rng.normal(size=classes)
    wl = rng.normal(size=(classes, dim))
    bl = rng.normal(size=classes)
    x = rng.random(dim)
    x_orig = rng.random(dim)
    grads = rng.normal(size=(models, dim))
    gram = grads @ grads.T
    img = rng.random((3, 8, 8))
    c = np.ascontiguousarray
    return {
        "linear_logits": (wl, bl, x),
        "linear_loss_grad": (wl, bl, c(wl.T), x, 3),
        "mlp_logits": (w1, b1, w2, b2, x),
        "mlp_loss_grad": (w1, b1, c(w1.T), w2, b2, c(w2.T), x, 3),
        "jacobi_eigh": (gram,),
        "project_box": (x, x_orig, 8.0 / 255.0),
        "step_project": (x, grads[0], 8.0 / 2550.0, x_orig, 8.0 / 255.0),
        "bilinear_resize_pad": (img, 7, 1, 0),
    }


def time_call(fn, args, reps):
    fn(*args)  # warmup (and JIT for the compiled family)
    started = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - started) / reps


def micro(reps):
    rng = np.random.default_rng(0)
    args = workload(rng)
    numpy_family = kernels.numpy_impls()
    numba_family = kernels.numba_impls()
    if numba_family is None:
        print("numba unavailable; micro-benchmark needs both families")
        return
    print(f"{'kernel':22s} {'numpy':>12s} {'numba':>12s} {'speedup':>8s}")
    for name in kernels.KERNEL_NAMES:
        t_np = time_call(numpy_family[name], args[name], reps)
        t_nb = time_call(numba_family[name], args[name], reps)
        print(f"{name:22s} {t_np * 1e6:10.2f}us {t_nb * 1e6:10.2f}us "
              f"{t_np / t_nb:7.1f}x")


def end_to_end(samples):
    snippet = (
        "import time, heatbench as hb\n"
        f"ds = hb.load_dataset(r'{REPO / 'fixtures' / 'blobs64.jsonl'}')\n"
        f"sur = [hb.load_model(r'{REPO / 'zoo'}' + '/' + n + '.json')"
        " for n in ('linear_a','linear_b','mlp_a','mlp_b')]\n"
        "cfg = hb.AttackConfig(method='heat', seed=0)\n"
        "hb.run_attack(sur, ds.samples[0], cfg, 0)  # warmup: JIT/cache load\n"
        "t0 = time.perf_counter()\n"
        f"for i, s in enumerate(ds.samples[:{samples}]):\n"
        "    hb.run_attack(sur, s, cfg, i)\n"
        "print(f'{time.perf_counter() - t0:.2f}')\n"
    )
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, HEATBENCH_PURE_NUMPY=flag)
        out = subprocess.run(
            [sys.executable, "-c", snippet], env=env, capture_output=True, text=True,
        )
        if out.returncode != 0:
            print(f"{label}: failed\n{out.stderr}")
            continue
        print(f"end-to-end ({samples} samples, combined method): "
              f"{label} {out.stdout.strip()}s")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=20000)
    parser.add_argument("--end-to-end", action="store_true")
    parser.add_argument("--samples", type=int, default=100)
    args = parser.parse_args()
    micro(args.reps)
    if args.end_to_end:
        end_to_end(args.samples)


if __name__ == "__main__":
    main()
