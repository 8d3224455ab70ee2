"""Straight-line reference implementations used as oracles by the tests.

Everything here is coded directly from the algorithm definitions in plain
numpy/Python, deliberately independent of the package's code paths: models
are rebuilt from the raw JSON files, the SVD uses numpy's dense routine, and
the attack step below is a single top-to-bottom transliteration. Tests
compare package outputs against these, never the other way around.
"""

import json
import math

import numpy as np


class RefModel:
    """Forward/backward for the JSON model format, written from scratch."""

    def __init__(self, path):
        raw = json.loads(open(path).read())
        self.kind = raw["kind"]
        self.mats = [
            (
                np.array(layer["weights"], dtype=np.float64).reshape(
                    layer["rows"], layer["cols"]
                ),
                np.array(layer["bias"], dtype=np.float64),
            )
            for layer in raw["layers"]
        ]
        self.input_dim = raw["input_dim"]
        self.num_classes = raw["num_classes"]

    def _forward(self, x):
        if self.kind == "linear-softmax":
            (w, b), = self.mats
            return w @ x + b, None
        (w1, b1), (w2, b2) = self.mats
        h = np.tanh(w1 @ x + b1)
        return w2 @ h + b2, h

    def loss(self, x, y):
        z, _ = self._forward(x)
        m = z.max()
        return float(m + math.log(np.exp(z - m).sum()) - z[y])

    def grad(self, x, y):
        z, h = self._forward(x)
        m = z.max()
        e = np.exp(z - m)
        p = e / e.sum()
        p[y] -= 1.0
        if self.kind == "linear-softmax":
            (w, _), = self.mats
            return w.T @ p
        (w1, _), (w2, _) = self.mats
        return w1.T @ ((w2.T @ p) * (1.0 - h * h))

    def predict(self, x):
        z, _ = self._forward(x)
        return int(np.argmax(z))


def ref_clip(x_adv, x_orig, eps):
    return np.minimum(np.maximum(x_adv, np.maximum(x_orig - eps, 0.0)),
                      np.minimum(x_orig + eps, 1.0))


def ref_svd_direction(g_matrix, ratio):
    """Consensus direction via numpy's dense SVD plus the documented sign
    convention (sum of left-vector entries >= 0; near-zero sums break on the
    largest-magnitude entry)."""
    u, s, vt = np.linalg.svd(g_matrix, full_matrices=False)
    keep = s > (s[0] * 1e-12 if s.size else 0.0)
    u, s, vt = u[:, keep], s[keep], vt[keep]
    for i in range(s.size):
        col = u[:, i]
        total = col.sum()
        if total < -1e-12 or (abs(total) <= 1e-12 and col[np.argmax(np.abs(col))] < 0):
            u[:, i] = -u[:, i]
            vt[i] = -vt[i]
    cum = np.cumsum(s)
    k = 1 + int(np.searchsorted(cum / s.sum(), ratio, side="left"))
    k = min(k, s.size)
    vk = sum(s[i] * vt[i] for i in range(k))
    return vk, k, float(cum[k - 1] / s.sum())


def ref_intra(models, x_anchor, x_orig, y, alpha, eps, eps_stab):
    m_count = len(models)
    grads = [m.grad(x_anchor, y) for m in models]
    probes = [ref_clip(x_anchor + alpha * np.sign(g), x_orig, eps) for g in grads]
    cross = [[models[j].loss(probes[i], y) for j in range(m_count)] for i in range(m_count)]
    raw = []
    for i in range(m_count):
        total = 0.0
        for j in range(m_count):
            if j != i:
                total += math.log(cross[i][j] + eps_stab) / (cross[j][j] + eps_stab)
        raw.append(max(total, eps_stab))
    norm = sum(raw)
    return np.array([v / norm for v in raw])


def ref_inter(models, x_vk, y, tau, eps_stab):
    m_count = len(models)
    losses = np.array([m.loss(x_vk, y) for m in models])
    grads = [m.grad(x_vk, y) for m in models]
    s_fac = losses + eps_stab
    a_fac = np.empty(m_count)
    for i in range(m_count):
        sims = []
        for j in range(m_count):
            if j == i:
                continue
            ni, nj = np.linalg.norm(grads[i]), np.linalg.norm(grads[j])
            sims.append(0.0 if ni <= eps_stab or nj <= eps_stab
                        else float(grads[i] @ grads[j] / (ni * nj)))
        mean = sum(sims) / (m_count - 1)
        a_fac[i] = 1.0 / (max(mean, 0.0) + eps_stab)
    s_norm = (s_fac / s_fac.sum()) ** (1.0 / tau)
    a_norm = (a_fac / a_fac.sum()) ** (1.0 / tau)
    ent = -(s_norm * np.log(s_norm) + a_norm * np.log(a_norm))
    raw = 1.0 / (ent + eps_stab)
    return raw / raw.sum()


def ref_attack_step(models, x_iter, x_orig, y, *, alpha, eps, ratio, tau, eps_stab):
    """One full combined-method update (all components on, plain sign base):
    consensus example, both weightings, weighted gradient, projected step."""
    g_matrix = np.stack([m.grad(x_iter, y) for m in models])
    vk, k, retained = ref_svd_direction(g_matrix, ratio)
    x_vk = ref_clip(x_iter + alpha * np.sign(vk), x_orig, eps)
    w_intra = ref_intra(models, x_iter, x_orig, y, alpha, eps, eps_stab)
    w_inter = ref_inter(models, x_vk, y, tau, eps_stab)
    grads_vk = [m.grad(x_vk, y) for m in models]
    g = sum(w_intra[i] * w_inter[i] * grads_vk[i] for i in range(len(models)))
    x_next = ref_clip(x_iter + alpha * np.sign(g), x_orig, eps)
    return x_next, w_intra, w_inter, k, retained
