"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

Every kernel is written once, in numba-compatible numpy, and compiled with
``@njit`` unless the environment variable ``HEATBENCH_PURE_NUMPY`` is set
(or numba is unavailable), in which case the same source runs uncompiled.
``numpy_impls()`` / ``numba_impls()`` expose both families side by side for
the benchmark in ``benchmarks/bench_kernels.py``.

All kernels take/return C-contiguous float64 arrays. Weight matrices are
passed together with their pre-transposed copies so the backward passes
never materialize a transpose.
"""

import os

import numpy as np

try:
    from numba import njit

    _NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency, but stay usable
    njit = None
    _NUMBA_AVAILABLE = False

_FORCE_NUMPY = os.environ.get("HEATBENCH_PURE_NUMPY", "").strip().lower() in ("1", "true", "yes")
USE_NUMBA = _NUMBA_AVAILABLE and not _FORCE_NUMPY
BACKEND = "numba" if USE_NUMBA else "numpy"


def _linear_logits(weights, bias, x):
    return np.dot(weights, x) + bias


def _linear_loss_grad(weights, bias, weights_t, x, y):
    z = np.dot(weights, x) + bias
    zmax = z.max()
    ez = np.exp(z - zmax)
    total = ez.sum()
    loss = np.log(total) + zmax - z[y]
    p = ez / total
    p[y] -= 1.0
    grad = np.dot(weights_t, p)
    return loss, grad


def _mlp_logits(w1, b1, w2, b2, x):
    hidden = np.tanh(np.dot(w1, x) + b1)
    return np.dot(w2, hidden) + b2


def _mlp_loss_grad(w1, b1, w1_t, w2, b2, w2_t, x, y):
    hidden = np.tanh(np.dot(w1, x) + b1)
    z = np.dot(w2, hidden) + b2
    zmax = z.max()
    ez = np.exp(z - zmax)
    total = ez.sum()
    loss = np.log(total) + zmax - z[y]
    p = ez / total
    p[y] -= 1.0
    dh = np.dot(w2_t, p)
    dpre = dh * (1.0 - hidden * hidden)
    grad = np.dot(w1_t, dpre)
    return loss, grad


def _jacobi_eigh(mat):
    # Cyclic Jacobi for a symmetric matrix; returns (eigenvalues descending,
    # eigenvector columns). Stops when the off-diagonal Frobenius norm drops
    # below 1e-14 of the input's Frobenius norm, max 100 sweeps.
    n = mat.shape[0]
    a = mat.copy()
    vecs = np.eye(n)
    fro = np.sqrt((mat * mat).sum())
    if fro == 0.0:
        return np.zeros(n), vecs
    for _sweep in range(100):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * a[p, q] * a[p, q]
        if np.sqrt(off) <= 1e-14 * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    if k != p and k != q:
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * akq
                        a[p, k] = a[k, p]
                        a[k, q] = s * akp + c * akq
                        a[q, k] = a[k, q]
                for k in range(n):
                    vkp = vecs[k, p]
                    vkq = vecs[k, q]
                    vecs[k, p] = c * vkp - s * vkq
                    vecs[k, q] = s * vkp + c * vkq
    evals = np.empty(n)
    for i in range(n):
        evals[i] = a[i, i]
    order = np.argsort(-evals, kind="mergesort")
    out_vals = np.empty(n)
    out_vecs = np.empty((n, n))
    for j in range(n):
        src = order[j]
        out_vals[j] = evals[src]
        for i in range(n):
            out_vecs[i, j] = vecs[i, src]
    return out_vals, out_vecs


def _project_box(x_adv, x_orig, epsilon):
    lo = np.maximum(x_orig - epsilon, 0.0)
    hi = np.minimum(x_orig + epsilon, 1.0)
    return np.minimum(np.maximum(x_adv, lo), hi)


def _step_project(x, direction, alpha, x_orig, epsilon):
    stepped = x + alpha * np.sign(direction)
    lo = np.maximum(x_orig - epsilon, 0.0)
    hi = np.minimum(x_orig + epsilon, 1.0)
    return np.minimum(np.maximum(stepped, lo), hi)


def _bilinear_resize_pad(img, side, top, left):
    # img: (C, H, W) -> bilinear resize to (side, side) with half-pixel
    # centers, then zero-pad back to (H, W) at the given offset.
    channels, h, w = img.shape
    out = np.zeros_like(img)
    scale_y = h / side
    scale_x = w / side
    for ch in range(channels):
        for i in range(side):
            sy = (i + 0.5) * scale_y - 0.5
            y0f = np.floor(sy)
            ty = sy - y0f
            y0 = int(y0f)
            y1 = y0 + 1
            if y0 < 0:
                y0 = 0
            if y1 > h - 1:
                y1 = h - 1
            for j in range(side):
                sx = (j + 0.5) * scale_x - 0.5
                x0f = np.floor(sx)
                tx = sx - x0f
                x0 = int(x0f)
                x1 = x0 + 1
                if x0 < 0:
                    x0 = 0
                if x1 > w - 1:
                    x1 = w - 1
                top_v = img[ch, y0, x0] * (1.0 - tx) + img[ch, y0, x1] * tx
                bot_v = img[ch, y1, x0] * (1.0 - tx) + img[ch, y1, x1] * tx
                out[ch, top + i, left + j] = top_v * (1.0 - ty) + bot_v * ty
    return out


_PY_IMPLS = {
    "linear_logits": _linear_logits,
    "linear_loss_grad": _linear_loss_grad,
    "mlp_logits": _mlp_logits,
    "mlp_loss_grad": _mlp_loss_grad,
    "jacobi_eigh": _jacobi_eigh,
    "project_box": _project_box,
    "step_project": _step_project,
    "bilinear_resize_pad": _bilinear_resize_pad,
}

KERNEL_NAMES = tuple(_PY_IMPLS)

_compiled_impls = None


def numpy_impls():
    """The uncompiled kernel family (always available)."""
    return dict(_PY_IMPLS)


def numba_impls():
    """The JIT-compiled kernel family; compiles on first call, None without numba."""
    global _compiled_impls
    if not _NUMBA_AVAILABLE:
        return None
    if _compiled_impls is None:
        _compiled_impls = {name: njit(cache=True)(fn) for name, fn in _PY_IMPLS.items()}
    return _compiled_impls


_active = numba_impls() if USE_NUMBA else numpy_impls()

linear_logits = _active["linear_logits"]
linear_loss_grad = _active["linear_loss_grad"]
mlp_logits = _active["mlp_logits"]
mlp_loss_grad = _active["mlp_loss_grad"]
jacobi_eigh = _active["jacobi_eigh"]
project_box = _active["project_box"]
step_project = _active["step_project"]
bilinear_resize_pad = _active["bilinear_resize_pad"]
