import math

import numpy as np
import pytest

from remdyn.operator import (
    GeneratorSpec,
    StateVector,
    apply,
    basis_vector,
    bind,
    flat_vector,
    materialize_dense,
    restrict_complement,
)
from remdyn.remfield import RemField, TabulatedField, extreme_set
from remdyn.spectral import extreme_eigs


def test_flat_vector():
    v = flat_vector(7)
    assert np.linalg.norm(v.entries) == pytest.approx(1.0, abs=1e-14)
    assert v.log_scale == 0.0
    assert np.allclose(flat_vector(1).entries, [2**-0.5, 2**-0.5], atol=0, rtol=1e-15)


def test_adjacency_on_flat():
    n = 9
    spec = GeneratorSpec.qrem(n, 1.0, 0.0)
    v = flat_vector(n)
    w = apply(spec, TabulatedField.constant(n, 0.0), v)
    assert float(v.entries @ w.entries) == pytest.approx(n, abs=1e-12)


def test_n2_generator_column():
    w = apply(GeneratorSpec.tilted(2, 0.0, 0.0), TabulatedField.constant(2, 0.0), basis_vector(2, 0))
    assert w.entries.tolist() == [-2.0, 1.0, 1.0, 0.0]


def test_dense_symmetric_and_conservative():
    f = RemField(1, 6)
    mat = materialize_dense(GeneratorSpec.tilted(6, 0.7, 0.2), f)
    assert np.array_equal(mat, mat.T)
    gen = materialize_dense(GeneratorSpec.tilted(6, 0.0, 0.0), f)
    assert np.abs(gen.sum(axis=0)).max() == 0.0
    rng = np.random.default_rng(0)
    s, t = rng.integers(0, 64, 2)
    assert mat[s, t] == mat[t, s]


def test_generator_top_eigenvalue_zero():
    gen = materialize_dense(GeneratorSpec.tilted(6, 0.0, 0.0), RemField(0, 6))
    assert np.linalg.eigvalsh(gen).max() == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("spec", [GeneratorSpec.tilted(8, 1.3, -0.4), GeneratorSpec.qrem(8, 0.3, 1.0)])
def test_dense_matches_matvec(spec):
    f = RemField(2, 8)
    mat = materialize_dense(spec, f)
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = rng.standard_normal(256)
        y = apply(spec, f, StateVector(8, x)).entries
        assert np.abs(mat @ x - y).max() < 1e-13


def test_matrix_free_relative_n10():
    f = RemField(5, 10)
    spec = GeneratorSpec.tilted(10, 0.9, 0.3)
    mat = materialize_dense(spec, f)
    x = np.random.default_rng(2).standard_normal(1024)
    y = bind(spec, f).matvec(x)
    ref = mat @ x
    assert np.linalg.norm(y - ref) / np.linalg.norm(ref) < 1e-13


def test_linearity():
    f = RemField(3, 9)
    op = bind(GeneratorSpec.qrem(9, 0.4, 1.1), f)
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal((2, 512))
    a, b = 0.7, -2.3
    assert np.abs(op.matvec(a * u + b * v) - a * op.matvec(u) - b * op.matvec(v)).max() < 1e-12


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        apply(GeneratorSpec.qrem(4, 1, 1), RemField(0, 5), flat_vector(5))
    with pytest.raises(ValueError):
        apply(GeneratorSpec.qrem(4, 1, 1), RemField(0, 4), flat_vector(5))
    with pytest.raises(ValueError):
        StateVector(3, np.ones(7))
    with pytest.raises(ValueError):
        materialize_dense(GeneratorSpec.qrem(13, 1, 1), RemField(0, 13))


def test_qrem_lambda_zero_top():
    n = 8
    r = extreme_eigs(GeneratorSpec.qrem(n, 0.6, 0.0), RemField(0, n), k=1, tol=1e-13)
    assert r.values[0] == pytest.approx(0.6 * n, abs=1e-12)


def test_mask_zeroes_rows_and_columns():
    f = RemField(4, 8)
    spec, _ = restrict_complement(GeneratorSpec.qrem(8, 0.3, 1.0), f, 0.5)
    mat = materialize_dense(spec, f)
    masked = spec.mask
    assert masked.sum() == extreme_set(f, 0.5).count
    assert not mat[masked].any() and not mat[:, masked].any()
    x = np.random.default_rng(0).standard_normal(256)
    assert np.abs(bind(spec, f).matvec(x) - mat @ x).max() < 1e-13


def test_restrict_huge_eta_is_identity():
    f = RemField(0, 8)
    spec = GeneratorSpec.qrem(8, 0.3, 1.0)
    r, a = restrict_complement(spec, f, 100.0)
    assert not r.mask.any()
    assert np.array_equal(materialize_dense(r, f), materialize_dense(spec, f))


def test_coupling_zero_at_gamma_zero():
    f = RemField(0, 8)
    _, a = restrict_complement(GeneratorSpec.qrem(8, 0.0, 1.0), f, 0.3)
    assert not a.apply(np.ones(256)).any()


def test_coupling_sums_outside_neighbours():
    f = RemField(6, 8)
    _, a = restrict_complement(GeneratorSpec.qrem(8, 0.5, 1.0), f, 0.4)
    inside = np.flatnonzero(a.inside)
    sigma = int(inside[0])
    x = np.zeros(256)
    x[sigma] = 1.0
    y = a.apply(x)
    for j in range(8):
        tau = sigma ^ (1 << j)
        assert y[tau] == (0.0 if a.inside[tau] else 0.5)
    # adjoint really is the transpose
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2, 256))
    assert float(a.apply(u) @ v) == pytest.approx(float(u @ a.adjoint(v)), rel=1e-12)


def test_restricted_top_interlaces():
    f = RemField(7, 8)
    spec = GeneratorSpec.qrem(8, 0.3, 1.0)
    r, _ = restrict_complement(spec, f, 0.3)
    full_top = extreme_eigs(spec, f).values[0]
    sub_top = extreme_eigs(r, f).values[0]
    assert sub_top <= full_top + 1e-10


def test_restrict_rejects_tilted():
    with pytest.raises(TypeError):
        restrict_complement(GeneratorSpec.tilted(4, 1.0), RemField(0, 4), 0.5)


def test_log_inner_flat():
    v = StateVector(2, np.array([0.5, 0.5, 0.5, 0.5]), log_scale=1.5)
    assert v.log_inner_flat() == pytest.approx(1.5, abs=1e-15)
    with pytest.raises(ArithmeticError):
        StateVector(1, np.array([1.0, -1.0])).log_inner_flat()
    assert math.isclose(v.dense()[0], 0.5 * math.exp(1.5))
