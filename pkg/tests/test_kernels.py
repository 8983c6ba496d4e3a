import os
import subprocess
import sys

import numpy as np
import pytest

from bmk import _kernels_py, kernels

compiled = pytest.importorskip("bmk._kernels")


def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_pure_python_override():
    env = dict(os.environ, BMK_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from bmk import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("lmax", [0, 1, 7, 30])
def test_legendre_backends_agree(lmax, rng):
    x = rng.uniform(-0.999, 0.999, 50)
    for a, b in zip(compiled.legendre_table(lmax, x), _kernels_py.legendre_table(lmax, x)):
        assert a.shape == b.shape
        assert np.abs(a - b).max() <= 1e-13 * max(1.0, np.abs(b).max())


@pytest.mark.parametrize("n", [1, 2])
def test_jet_algebra_backends_agree(n, rng):
    v = rng.uniform(0.5, 2.0, 300)
    H = rng.normal(size=(300, n, n))
    H = 0.5 * (H + H.transpose(0, 2, 1))
    for a, b in zip(compiled.jet_algebra(v, H), _kernels_py.jet_algebra(v, H)):
        assert np.abs(a - b).max() < 1e-14


def test_jet_algebra_values_2x2(rng):
    v = rng.uniform(1, 2, 50)
    H = rng.normal(scale=0.3, size=(50, 2, 2))
    H = 0.5 * (H + H.transpose(0, 2, 1))
    W, det, U, mineig = kernels.jet_algebra(v, H)
    assert np.allclose(det, np.linalg.det(W))
    assert np.allclose(U @ W, det[:, None, None] * np.eye(2))
    assert np.allclose(mineig, np.linalg.eigvalsh(W)[:, 0])


@pytest.mark.parametrize("d", [2, 3])
def test_support_max_backends_agree(d, rng):
    dirs = rng.normal(size=(400, d))
    verts = rng.normal(size=(37, d))
    ref = (dirs @ verts.T).max(axis=1)
    assert np.abs(compiled.support_max(dirs, verts) - ref).max() < 1e-13
    assert np.abs(_kernels_py.support_max(dirs, verts) - ref).max() < 1e-13
