"""Backend parity: the compiled kernels and the pure-numpy fallback are the
same source, so they must agree to the last few ulps on random inputs."""

import numpy as np
import pytest

from heatbench import kernels


@pytest.fixture(scope="module")
def families():
    numba_family = kernels.numba_impls()
    if numba_family is None:
        pytest.skip("numba not available")
    return kernels.numpy_impls(), numba_family


def test_backend_constant():
    assert kernels.BACKEND in ("numba", "numpy")
    assert set(kernels.KERNEL_NAMES) == set(kernels.numpy_impls())


def test_model_kernels_agree(families):
    py, nb = families
    rng = np.random.default_rng(0)
    for _ in range(20):
        d, h, k = 24, 8, 5
        w = rng.normal(size=(k, d))
        b = rng.normal(size=k)
        x = rng.random(d)
        y = int(rng.integers(k))
        lp, gp = py["linear_loss_grad"](w, b, np.ascontiguousarray(w.T), x, y)
        ln, gn = nb["linear_loss_grad"](w, b, np.ascontiguousarray(w.T), x, y)
        assert abs(lp - ln) < 1e-12
        np.testing.assert_allclose(gp, gn, rtol=1e-12, atol=1e-15)

        w1 = rng.normal(size=(h, d))
        b1 = rng.normal(size=h)
        w2 = rng.normal(size=(k, h))
        b2 = rng.normal(size=k)
        args = (w1, b1, np.ascontiguousarray(w1.T), w2, b2, np.ascontiguousarray(w2.T), x, y)
        lp, gp = py["mlp_loss_grad"](*args)
        ln, gn = nb["mlp_loss_grad"](*args)
        assert abs(lp - ln) < 1e-12
        np.testing.assert_allclose(gp, gn, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(
            py["mlp_logits"](w1, b1, w2, b2, x), nb["mlp_logits"](w1, b1, w2, b2, x),
            rtol=1e-12, atol=1e-15,
        )


def test_jacobi_agrees_and_matches_numpy_eigh(families):
    py, nb = families
    rng = np.random.default_rng(1)
    for n in (1, 2, 3, 5, 8):
        a = rng.normal(size=(n, n))
        sym = a @ a.T
        vp, up = py["jacobi_eigh"](sym)
        vn, un = nb["jacobi_eigh"](sym)
        np.testing.assert_allclose(vp, vn, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(np.abs(up), np.abs(un), rtol=0, atol=1e-10)
        # against numpy's symmetric eigensolver (ascending -> flip)
        expected = np.linalg.eigvalsh(sym)[::-1]
        np.testing.assert_allclose(vp, expected, rtol=1e-10, atol=1e-10)
        # eigenvector property: sym @ u = lambda * u
        for i in range(n):
            np.testing.assert_allclose(
                sym @ up[:, i], vp[i] * up[:, i], atol=1e-9 * max(1.0, abs(vp[0]))
            )


def test_step_and_projection_kernels_agree(families):
    py, nb = families
    rng = np.random.default_rng(2)
    for _ in range(20):
        x_orig = rng.random(64)
        x = np.clip(x_orig + rng.normal(scale=0.05, size=64), 0, 1)
        direction = rng.normal(size=64)
        for name, args in [
            ("project_box", (x + rng.normal(scale=0.1, size=64), x_orig, 0.03)),
            ("step_project", (x, direction, 0.01, x_orig, 0.03)),
        ]:
            np.testing.assert_array_equal(py[name](*args), nb[name](*args))


def test_bilinear_kernels_agree(families):
    py, nb = families
    rng = np.random.default_rng(3)
    img = rng.random((3, 8, 8))
    for side in (4, 5, 7, 8):
        top = int(rng.integers(0, 8 - side + 1))
        left = int(rng.integers(0, 8 - side + 1))
        np.testing.assert_array_equal(
            py["bilinear_resize_pad"](img, side, top, left),
            nb["bilinear_resize_pad"](img, side, top, left),
        )


def test_bilinear_identity_is_exact(families):
    py, nb = families
    img = np.random.default_rng(4).random((3, 8, 8))
    for fam in (py, nb):
        np.testing.assert_array_equal(fam["bilinear_resize_pad"](img, 8, 0, 0), img)
