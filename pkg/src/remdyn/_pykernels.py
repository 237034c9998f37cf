"""Pure-numpy kernels. Arithmetic mirrors ``_ext.pyx`` operation by operation.

Both backends must agree bit for bit on generated energies and sampled
trajectories, so every floating-point expression here is written in the
same order as its Cython twin and transcendental functions are avoided
(``det_log`` replaces ``log``; ``sqrt`` is correctly rounded everywhere).
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
STREAM_MULT = 0xD1B54A32D192ED03

_U = np.uint64
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)

LN2_HI = 6.93147180369123816490e-01
LN2_LO = 1.90821492927058770002e-10
SQRT_HALF = 0.70710678118654752440
TWO_M53 = 1.0 / 9007199254740992.0

# 1/(2k+1), k = 12..0, for the atanh series of det_log
_LOG_COEF = tuple(1.0 / (2 * k + 1) for k in range(12, -1, -1))

# Wichura AS241 (PPND16)
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _horner(coef, r):
    acc = coef[7] * r + coef[6]
    for c in coef[5::-1]:
        acc = acc * r + c
    return acc


def mix64(x):
    """splitmix64 finalizer on a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=_U)
    x = (x ^ (x >> _U(30))) * _M1
    x = (x ^ (x >> _U(27))) * _M2
    return x ^ (x >> _U(31))


def seed_key(seed: int) -> int:
    return int(mix64(np.array([(seed + GOLDEN) & MASK64], dtype=_U))[0])


def stream_key(key: int, stream):
    s = np.asarray(stream, dtype=_U)
    return mix64(_U(key) + s * _U(STREAM_MULT))


def words(skey, counter):
    """64-bit output word number ``counter`` of the stream with key ``skey``."""
    if isinstance(counter, (int, np.integer)):
        step = _U(((int(counter) + 1) * GOLDEN) & MASK64)
    else:
        step = (np.asarray(counter, dtype=_U) + _U(1)) * _U(GOLDEN)
    return mix64(np.asarray(skey, dtype=_U) + step)


def det_log(x):
    """Natural log from +, *, / and frexp only; accurate to a few ulp on (0, inf)."""
    x = np.asarray(x, dtype=np.float64)
    m, e = np.frexp(x)
    low = m < SQRT_HALF
    m = np.where(low, m * 2.0, m)
    e = np.where(low, e - 1, e).astype(np.float64)
    s = (m - 1.0) / (m + 1.0)
    s2 = s * s
    p = np.full_like(s, _LOG_COEF[0])
    for c in _LOG_COEF[1:]:
        p = p * s2 + c
    return e * LN2_HI + (e * LN2_LO + 2.0 * s * p)


def ndtri(p):
    """Inverse standard normal CDF (AS241) on an array of p in (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    central = np.abs(q) <= 0.425
    r = 0.180625 - q * q
    out = q * _horner(_A, r) / _horner(_B, r)
    tail = ~central
    if tail.any():
        pt = p[tail]
        qt = q[tail]
        rt = np.where(qt < 0.0, pt, 1.0 - pt)
        rt = np.sqrt(-det_log(rt))
        near = rt <= 5.0
        r1 = rt - 1.6
        r2 = rt - 5.0
        val = np.where(near, _horner(_C, r1) / _horner(_D, r1),
                       _horner(_E, r2) / _horner(_F, r2))
        out[tail] = np.where(qt < 0.0, -val, val)
    return out


def _uniform_open(w1, w2):
    hi = (w1 >> _U(11)).astype(np.float64)
    lo = (w2 >> _U(11)).astype(np.float64)
    return (hi + (lo + 0.5) * TWO_M53) * TWO_M53


def standard_normals(seed: int, start: int, count: int) -> np.ndarray:
    """z(seed, sigma) for sigma in [start, start + count)."""
    key = seed_key(seed)
    sig = np.arange(start, start + count, dtype=_U)
    sk = stream_key(key, sig)
    u = _uniform_open(words(sk, 0), words(sk, 1))
    return ndtri(u)


def hypercube_matvec(v, diag, coupling, n, out=None):
    """out = diag * v + coupling * T v, T the hypercube adjacency."""
    if out is None:
        out = np.empty_like(v)
    np.multiply(diag, v, out=out)
    if coupling != 0.0:
        acc = np.zeros_like(v)
        size = v.shape[0]
        for j in range(n):
            block = 1 << j
            view = v.reshape(size // (2 * block), 2, block)[:, ::-1, :]
            acc += view.reshape(size)
        out += coupling * acc
    return out


def sample_integrate(energies, n, t_final, key, stream_start, count):
    """Sample ``count`` random-walk paths and integrate the landscape along each.

    Draw layout per stream: word 0 -> initial configuration, words 2k+1 and
    2k+2 -> k-th waiting time and flipped spin.
    Returns (integrals, jump_counts).
    """
    streams = np.arange(stream_start, stream_start + count, dtype=_U)
    sk = stream_key(key, streams)
    shift = _U(64 - n)
    state = (words(sk, 0) >> shift).astype(np.int64)
    clock = np.zeros(count)
    integral = np.zeros(count)
    jumps = np.zeros(count, dtype=np.int64)
    active = np.arange(count)
    rate = float(n)
    k = 0
    while active.size:
        ska = sk[active]
        wt = words(ska, 2 * k + 1)
        wf = words(ska, 2 * k + 2)
        u = ((wt >> _U(11)).astype(np.float64) + 1.0) * TWO_M53
        tau = -det_log(u) / rate
        st = state[active]
        now = clock[active]
        nxt = now + tau
        done = nxt >= t_final
        hold = np.where(done, t_final - now, tau)
        integral[active] += energies[st] * hold
        go = ~done
        idx = active[go]
        flip = ((wf[go] >> _U(11)).astype(np.float64) * TWO_M53 * rate).astype(np.int64)
        state[idx] = st[go] ^ (np.int64(1) << flip)
        clock[idx] = nxt[go]
        jumps[idx] += 1
        active = idx
        k += 1
    return integral, jumps
