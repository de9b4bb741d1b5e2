import os

import numpy as np
import pytest

from multiloc import _pykernels, kernels

ck = pytest.importorskip("multiloc._ckernels")


def test_backend_selected():
    pure = os.environ.get("MULTILOC_PURE", "") in ("1", "true", "yes")
    assert kernels.BACKEND == ("python" if pure else "cython")


def test_site_uniforms_bit_identical():
    coords = np.array([[i, j] for i in range(-4, 5) for j in range(-3, 4)], dtype=np.int64)
    for seed in (0, 1, 2 ** 63 + 5):
        for k in (0, 3, 1000):
            a = _pykernels.site_uniforms(seed, k, coords)
            b = ck.site_uniforms(seed, k, coords)
            assert np.array_equal(a, b)
            assert np.all((a > 0) & (a < 1))


def test_hausdorff_and_splitting_bit_identical():
    rng = np.random.default_rng(4)
    a = rng.integers(-5, 6, size=(7, 3, 2)).astype(np.int64)
    b = rng.integers(-5, 6, size=(9, 3, 2)).astype(np.int64)
    assert np.array_equal(_pykernels.hausdorff_matrix(a, b), ck.hausdorff_matrix(a, b))
    assert np.array_equal(_pykernels.splitting_widths(a), ck.splitting_widths(a))


def test_uniforms_region_extension_stable():
    small = np.array([[0], [1]], dtype=np.int64)
    big = np.array([[-1], [0], [1], [2]], dtype=np.int64)
    assert np.array_equal(kernels.site_uniforms(9, 0, small), kernels.site_uniforms(9, 0, big)[1:3])
