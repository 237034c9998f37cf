import statistics

import numpy as np
import pytest

from remdyn.operator import GeneratorSpec, StateVector, flat_vector, materialize_dense
from remdyn.remfield import RemField, TabulatedField
from remdyn.resolvent import (
    ResolventError,
    admissible_energy,
    dense_resolvent,
    gamma_n,
    l1_bound_report,
    operator_norms,
    potential_resolvent,
    solve_resolvent,
    top_eigenvalue,
)


def test_gamma0_diagonal_solve():
    f = RemField(0, 8)
    spec = GeneratorSpec.qrem(8, 0.0, 1.0)
    E = 40.0
    rhs = StateVector(8, np.random.default_rng(0).standard_normal(256))
    x = solve_resolvent(spec, f, E, rhs)
    assert np.array_equal(x.entries, rhs.entries / (E + f.table()))


def test_residual_n10():
    f = RemField(1, 10)
    spec = GeneratorSpec.qrem(10, 0.3, 1.0)
    E = admissible_energy(f, 0.3, 1.0)
    b = np.random.default_rng(1).standard_normal(1024)
    x = solve_resolvent(spec, f, E, StateVector(10, b), tol=1e-12)
    m = E * np.eye(1024) - materialize_dense(spec, f)
    assert np.linalg.norm(m @ x.entries - b) <= 1e-12 * np.linalg.norm(b) * 1.01


def test_cg_vs_dense_n8():
    f = RemField(2, 8)
    spec = GeneratorSpec.qrem(8, 0.2, 1.0)
    E = admissible_energy(f, 0.2, 1.0)
    rhs = StateVector(8, np.random.default_rng(2).standard_normal(256))
    a = solve_resolvent(spec, f, E, rhs, method="cg").entries
    b = solve_resolvent(spec, f, E, rhs, method="dense").entries
    assert np.abs(a - b).max() < 1e-9


def test_rejects_energy_in_spectrum():
    f = RemField(3, 8)
    spec = GeneratorSpec.qrem(8, 0.3, 1.0)
    top = top_eigenvalue(spec, f)
    with pytest.raises(ResolventError) as info:
        solve_resolvent(spec, f, top, flat_vector(8))
    assert info.value.top == pytest.approx(top)


def test_gamma_n_zero_field():
    assert gamma_n(TabulatedField.constant(8, 0.0), 5.0) == 0.0


def test_gamma_n_monotone_in_E():
    f = RemField(4, 10)
    assert gamma_n(f, 30.0) <= gamma_n(f, 20.0)


def test_gamma_n_singular():
    f = RemField(5, 8)
    with pytest.raises(ResolventError, match="singular"):
        gamma_n(f, 0.5)


def test_gamma_n_truncated_smaller():
    f = RemField(6, 10)
    assert gamma_n(f, 20.0, eta=0.5) <= gamma_n(f, 20.0)


def test_gamma_n_distribution_n12():
    vals = [gamma_n(RemField(s, 12), 24.0) for s in range(20)]
    assert statistics.median(vals) < 0.25


def test_l1_gamma0_equality():
    f = RemField(7, 8)
    E = 30.0
    rep = l1_bound_report(f, 0.0, 1.0, E)
    expected = 1.0 / (E + f.table())
    assert np.allclose(rep.lhs, expected, rtol=1e-14, atol=0)
    assert np.allclose(rep.rhs, expected, rtol=1e-14, atol=0)
    assert rep.all_pass


@pytest.mark.parametrize("seed", range(3))
def test_l1_bound_n10(seed):
    f = RemField(seed, 10)
    E = 1.5 * max(0.2 * 10, float(np.abs(f.table()).max()))
    E = max(E, admissible_energy(f, 0.2, 1.0))
    rep = l1_bound_report(f, 0.2, 1.0, E)
    assert rep.all_pass and rep.condition_ok
    assert rep.lhs.min() >= -1e-12
    assert rep.l1_norm <= rep.rhs.max() + 1e-10
    assert len(rep.per_sigma) == 1024


def test_l1_matches_dense_column_sums():
    f = RemField(1, 8)
    E = admissible_energy(f, 0.2, 1.0)
    rep = l1_bound_report(f, 0.2, 1.0, E)
    r = dense_resolvent(GeneratorSpec.qrem(8, 0.2, 1.0), f, E)
    assert rep.l1_norm == pytest.approx(operator_norms(r)["l1"], rel=1e-10)


def test_l1_precondition_failures_named():
    f = RemField(0, 8)
    with pytest.raises(ResolventError) as info:
        l1_bound_report(f, 0.2, 1.0, 1.0)
    assert len(info.value.failures) >= 2


def test_dense_facts_n8():
    f = RemField(3, 8)
    E = admissible_energy(f, 0.25, 1.0)
    r = dense_resolvent(GeneratorSpec.qrem(8, 0.25, 1.0), f, E)
    assert r.min() >= -1e-12
    norms = operator_norms(r)
    assert abs(norms["l1"] - norms["linf"]) < 1e-10
    v = f.table()
    bump = np.random.default_rng(0).uniform(0, 2, v.size)
    low = potential_resolvent(v, 0.25, E)
    high = potential_resolvent(v + bump, 0.25, E)
    assert (high - low).max() <= 1e-12
    assert np.allclose(low, r, atol=1e-14)
