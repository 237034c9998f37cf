"""The compiled kernels and the numpy fallback must agree to the bit."""
import numpy as np
import pytest
from scipy.special import ndtri as scipy_ndtri

from remdyn import _pykernels as py
from remdyn._backend import BACKEND

ext = pytest.importorskip("remdyn._ext")


def test_backend_selected():
    assert BACKEND in ("cython", "python")


def test_normals_identical():
    for seed in (0, 1, 2**63 + 5):
        a = ext.standard_normals(seed, 1000, 5000)
        b = py.standard_normals(seed, 1000, 5000)
        assert np.array_equal(a, b)


def test_ndtri_identical_and_accurate():
    p = np.concatenate([np.linspace(1e-300, 1e-10, 50), np.linspace(1e-6, 1 - 1e-6, 999),
                        [0.5, 0.025, 0.975, 2**-53]])
    a, b = ext.ndtri(p), py.ndtri(p)
    assert np.array_equal(a, b)
    mid = (p > 1e-10) & (p < 1 - 1e-10)
    assert np.abs(a[mid] - scipy_ndtri(p[mid])).max() < 1e-13


def test_det_log_identical_and_accurate():
    x = np.geomspace(1e-300, 1e300, 2001)
    a, b = ext.det_log(x), py.det_log(x)
    assert np.array_equal(a, b)
    assert np.abs(a - np.log(x)).max() <= 1e-15 * np.abs(np.log(x)).max()


def test_matvec_identical():
    rng = np.random.default_rng(0)
    n = 10
    v = rng.standard_normal(1 << n)
    d = rng.standard_normal(1 << n)
    for c in (0.0, 0.37):
        assert np.array_equal(ext.hypercube_matvec(v, d, c, n), py.hypercube_matvec(v, d, c, n))


def test_trajectories_identical():
    e = np.ascontiguousarray(np.random.default_rng(1).standard_normal(256))
    key = py.seed_key(42)
    ia, ja = ext.sample_integrate(e, 8, 1.3, key, 17, 3000)
    ib, jb = py.sample_integrate(e, 8, 1.3, key, 17, 3000)
    assert np.array_equal(ja, jb)
    assert np.array_equal(ia, ib)


def test_seed_key_identical():
    for s in (0, 1, 12345, 2**64 - 1):
        assert ext.seed_key(s) == py.seed_key(s)


def test_env_selects_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, REMDYN_BACKEND="python")
    code = ("from remdyn._backend import BACKEND; from remdyn.remfield import RemField; "
            "print(BACKEND, RemField(3, 6).energy(5).hex())")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out[0] == "python"
    from remdyn.remfield import RemField

    assert float.fromhex(out[1]) == RemField(3, 6).energy(5)
