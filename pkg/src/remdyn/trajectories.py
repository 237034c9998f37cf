"""Continuous-time simple random walk on the hypercube and Feynman-Kac estimators.

Every path is driven by its own counter-based stream (master seed, stream
index), so samples are reproducible and independent of batching or the
number of workers. Draw layout of a stream: word 0 picks the uniform initial
configuration; words 2k+1 and 2k+2 give the k-th exponential waiting time
(rate n) and the flipped spin.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from . import _pykernels as ref
from ._backend import kernels
from .remfield import Landscape
from .spectral import Method, log_moment

BATCH = 1 << 16
MIN_ESS = 30
CI_Z = 3.0


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    index: int

    def key(self) -> int:
        return ref.seed_key(self.master_seed)


@dataclass(frozen=True, eq=False)
class Trajectory:
    n: int
    t_final: float
    initial: int
    holding: np.ndarray  # K + 1 durations; the last one is the final partial interval
    flips: np.ndarray

    @property
    def jump_count(self) -> int:
        return int(self.flips.size)

    @property
    def jump_times(self) -> np.ndarray:
        return np.cumsum(self.holding[:-1])

    def states(self) -> np.ndarray:
        """Configuration held during each holding interval."""
        out = np.empty(self.flips.size + 1, dtype=np.int64)
        out[0] = self.initial
        if self.flips.size:
            out[1:] = self.initial ^ np.bitwise_xor.accumulate(np.left_shift(1, self.flips))
        return out

    def reversed(self) -> "Trajectory":
        st = self.states()
        return Trajectory(self.n, self.t_final, int(st[-1]), self.holding[::-1].copy(),
                          self.flips[::-1].copy())


def sample_trajectory(n: int, t: float, stream: RngStream) -> Trajectory:
    if not t > 0:
        raise ValueError("t must be positive")
    sk = ref.stream_key(stream.key(), np.array([stream.index]))
    state = int(ref.words(sk, 0)[0] >> np.uint64(64 - n))
    initial = state
    clock = 0.0
    holding, flips = [], []
    k = 0
    while True:
        wt = int(ref.words(sk, 2 * k + 1)[0])
        wf = int(ref.words(sk, 2 * k + 2)[0])
        u = (float(wt >> 11) + 1.0) * ref.TWO_M53
        tau = float(-ref.det_log(np.array([u]))[0] / n)
        nxt = clock + tau
        if nxt >= t:
            holding.append(t - clock)
            break
        holding.append(tau)
        flips.append(int(float(wf >> 11) * ref.TWO_M53 * n))
        clock = nxt
        k += 1
    return Trajectory(n, t, initial, np.array(holding), np.array(flips, dtype=np.int64))


def integrate_energy(traj: Trajectory, field: Landscape) -> float:
    """U_t = sum over holding intervals of U(state) * duration (exactly rounded sum)."""
    if traj.n != field.n:
        raise ValueError("trajectory and landscape sizes differ")
    u = np.array([field.energy(int(s)) for s in traj.states()])
    return math.fsum((u * traj.holding).tolist())


def spin_occupation(traj: Trajectory, j: int) -> float:
    """Fraction of [0, t] spent with bit j set."""
    bits = (traj.states() >> j) & 1
    return float(np.dot(bits, traj.holding)) / traj.t_final


def sample_paths(field: Landscape, t: float, samples: int, master_seed: int,
                 workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(U_t, K) for streams 0..samples-1; batches reduce in index order."""
    if not t > 0:
        raise ValueError("t must be positive")
    energies = np.ascontiguousarray(field.table(), dtype=np.float64)
    key = ref.seed_key(master_seed)
    starts = list(range(0, samples, BATCH))

    def run(start):
        return kernels.sample_integrate(energies, field.n, float(t), key, start,
                                        min(BATCH, samples - start))

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


@dataclass
class MgfEstimate:
    n: int
    t: float
    lam: float
    samples: int
    mean: float
    stderr: float
    log_mean: float
    exact: Optional[float] = None

    @property
    def z_score(self) -> Optional[float]:
        if self.exact is None:
            return None
        if self.stderr == 0:
            return 0.0 if self.mean == self.exact else math.inf
        return (self.mean - self.exact) / self.stderr


def dense_mgf(field: Landscape, t: float, lam: float) -> float:
    """<-| exp(t (T - n + lam U)) |-> from the dense eigendecomposition."""
    return math.exp(log_moment(field, t, lam, 0.0, method=Method.DENSE))


def mgf_estimate(field: Landscape, t: float, lam: float, samples: int, master_seed: int,
                 exact: bool = False, workers: int = 1) -> MgfEstimate:
    """Monte Carlo mean of exp(lam U_t) with its standard error."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    ut, _ = sample_paths(field, t, samples, master_seed, workers)
    lw = lam * ut
    top = float(lw.max())
    w = np.exp(lw - top)
    m = float(w.mean())
    sd = float(w.std(ddof=1))
    scale = math.exp(top)
    ref_value = dense_mgf(field, t, lam) if exact else None
    return MgfEstimate(field.n, t, lam, samples, m * scale, sd * scale / math.sqrt(samples),
                       top + math.log(m), ref_value)


@dataclass
class ActivityEstimate:
    untilted: float
    untilted_stderr: float
    tilted: float
    tilted_stderr: float
    tilted_ci: tuple
    ess: float
    flagged: bool


def _jackknife_ratio(num: np.ndarray, den: np.ndarray, groups: int = 100):
    """Delete-one-group jackknife of sum(num)/sum(den)."""
    size = num.size
    groups = min(groups, size)
    edges = np.linspace(0, size, groups + 1).astype(int)
    gn = np.add.reduceat(num, edges[:-1])
    gd = np.add.reduceat(den, edges[:-1])
    tn, td = gn.sum(), gd.sum()
    est = tn / td
    loo = (tn - gn) / (td - gd)
    var = (groups - 1) / groups * float(((loo - loo.mean()) ** 2).sum())
    return float(est), math.sqrt(var)


def activity_estimate(field: Landscape, t: float, lam: float, samples: int, master_seed: int,
                      workers: int = 1) -> ActivityEstimate:
    """Untilted mean K/(n t) and the exp(lam U_t)-tilted activity with a
    jackknife interval of half-width CI_Z standard errors."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    ut, k = sample_paths(field, t, samples, master_seed, workers)
    n = field.n
    act = k / (n * t)
    untilted = float(act.mean())
    un_se = float(act.std(ddof=1)) / math.sqrt(samples)
    lw = lam * ut
    w = np.exp(lw - lw.max())
    tilted, se = _jackknife_ratio(w * act, w)
    ess = float(w.sum() ** 2 / (w * w).sum())
    return ActivityEstimate(untilted, un_se, tilted, se, (tilted - CI_Z * se, tilted + CI_Z * se),
                            ess, ess < MIN_ESS)


def activity_oracle(field: Landscape, t: float, lam: float, h: float = 1e-4) -> float:
    """-d theta_N / ds at s = 0 by a central difference of dense ln Z."""
    up = log_moment(field, t, lam, h, method=Method.DENSE)
    down = log_moment(field, t, lam, -h, method=Method.DENSE)
    return -(up - down) / (2.0 * h * field.n * t)


def log_mean_weight(ut: np.ndarray, lam: float) -> float:
    return float(logsumexp(lam * ut)) - math.log(ut.size)
