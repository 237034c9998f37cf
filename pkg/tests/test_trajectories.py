import math

import numpy as np
import pytest

from remdyn.remfield import RemField, TabulatedField
from remdyn.trajectories import (
    RngStream,
    activity_estimate,
    activity_oracle,
    integrate_energy,
    log_mean_weight,
    mgf_estimate,
    sample_paths,
    sample_trajectory,
    spin_occupation,
)


def test_trajectory_structure():
    for i in range(200):
        tr = sample_trajectory(6, 2.0, RngStream(3, i))
        times = tr.jump_times
        assert np.all(np.diff(times) > 0)
        assert times.size == 0 or (times[0] > 0 and times[-1] <= 2.0)
        assert tr.flips.size == tr.jump_count
        assert np.all((tr.flips >= 0) & (tr.flips < 6))
        assert math.fsum(tr.holding) == pytest.approx(2.0, abs=1e-12)
        assert 0 <= tr.initial < 64


def test_same_stream_same_path():
    a = sample_trajectory(8, 1.0, RngStream(9, 4))
    b = sample_trajectory(8, 1.0, RngStream(9, 4))
    assert a.initial == b.initial
    assert np.array_equal(a.holding, b.holding) and np.array_equal(a.flips, b.flips)


def test_scalar_sampler_matches_batch_kernel():
    f = RemField(1, 8)
    ut, k = sample_paths(f, 1.3, 50, 7)
    for i in (0, 13, 49):
        tr = sample_trajectory(8, 1.3, RngStream(7, i))
        assert tr.jump_count == k[i]
        assert integrate_energy(tr, f) == pytest.approx(ut[i], rel=1e-13, abs=1e-13)


def test_mean_jump_count():
    _, k = sample_paths(RemField(0, 8), 1.0, 100_000, 1)
    assert abs(k.mean() - 8.0) <= 4 * math.sqrt(8 / 1e5)


def test_batching_and_workers_do_not_change_results():
    f = RemField(2, 6)
    a = sample_paths(f, 0.7, 70_000, 5, workers=1)
    b = sample_paths(f, 0.7, 70_000, 5, workers=3)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    head = sample_paths(f, 0.7, 1000, 5)
    assert np.array_equal(head[0], a[0][:1000])


def test_constant_landscape():
    f = TabulatedField.constant(5, 2.5)
    tr = sample_trajectory(5, 1.7, RngStream(0, 1))
    assert integrate_energy(tr, f) == pytest.approx(2.5 * 1.7, abs=1e-14)


def test_no_jumps():
    f = RemField(3, 4)
    for i in range(500):
        tr = sample_trajectory(4, 0.01, RngStream(1, i))
        if tr.jump_count == 0:
            assert integrate_energy(tr, f) == f.energy(tr.initial) * 0.01
            return
    pytest.fail("no jump-free path found")


def test_integral_vs_grid_quadrature():
    f = RemField(4, 6)
    tr = sample_trajectory(6, 1.0, RngStream(2, 0))
    dt = 1e-4
    grid = (np.arange(10_000) + 0.5) * dt
    edges = np.concatenate([[0.0], tr.jump_times])
    idx = np.searchsorted(edges, grid, side="right") - 1
    states = tr.states()[idx]
    approx = float(sum(f.energy(int(s)) for s in states) * dt)
    exact = integrate_energy(tr, f)
    assert abs(approx - exact) <= 1e-3 * abs(exact) + 1e-6


def test_reversal_preserves_integral():
    f = RemField(5, 7)
    for i in range(50):
        tr = sample_trajectory(7, 1.5, RngStream(4, i))
        assert integrate_energy(tr.reversed(), f) == integrate_energy(tr, f)


def test_stationary_spin_occupation():
    occ = [spin_occupation(sample_trajectory(6, 1.0, RngStream(8, i)), 2) for i in range(4000)]
    m = float(np.mean(occ))
    se = float(np.std(occ)) / math.sqrt(len(occ))
    assert abs(m - 0.5) <= 4 * se


def test_dimension_mismatch():
    tr = sample_trajectory(5, 1.0, RngStream(0, 0))
    with pytest.raises(ValueError):
        integrate_energy(tr, RemField(0, 6))


def test_mgf_lambda0():
    est = mgf_estimate(RemField(0, 8), 1.0, 0.0, 1000, 3)
    assert est.mean == 1.0 and est.stderr == 0.0


def test_mgf_vs_dense():
    est = mgf_estimate(RemField(0, 8), 1.0, 1.0, 100_000, 2, exact=True)
    assert abs(est.z_score) <= 3
    assert est.log_mean == pytest.approx(log_mean_weight(sample_paths(RemField(0, 8), 1.0, 100_000, 2)[0], 1.0))


def test_mgf_stderr_scaling():
    f = RemField(1, 8)
    a = mgf_estimate(f, 1.0, 0.5, 20_000, 6)
    b = mgf_estimate(f, 1.0, 0.5, 80_000, 6)
    assert b.stderr == pytest.approx(a.stderr / 2, rel=0.25)


def test_mgf_rejects_few_samples():
    with pytest.raises(ValueError):
        mgf_estimate(RemField(0, 4), 1.0, 1.0, 50, 0)


def test_untilted_activity():
    a = activity_estimate(RemField(0, 8), 1.0, 0.0, 100_000, 4)
    assert abs(a.untilted - 1.0) <= 4 * a.untilted_stderr
    assert a.tilted == pytest.approx(a.untilted, rel=1e-12)


def test_tilted_activity_in_ci():
    f = RemField(0, 8)
    a = activity_estimate(f, 1.0, 1.0, 100_000, 5)
    oracle = activity_oracle(f, 1.0, 1.0)
    assert a.tilted_ci[0] <= oracle <= a.tilted_ci[1]
    assert not a.flagged


def test_glass_tilt_lowers_activity():
    f = RemField(0, 10)
    oracle = activity_oracle(f, 2.0, 2.0)
    assert oracle < 1.0
    a = activity_estimate(f, 2.0, 2.0, 100_000, 6)
    assert a.tilted < a.untilted
