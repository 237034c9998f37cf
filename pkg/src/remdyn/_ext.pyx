# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see _pykernels.py for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport frexp, sqrt, fabs
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t STREAM_MULT = 0xD1B54A32D192ED03ULL
cdef double LN2_HI = 6.93147180369123816490e-01
cdef double LN2_LO = 1.90821492927058770002e-10
cdef double SQRT_HALF = 0.70710678118654752440
cdef double TWO_M53 = 1.0 / 9007199254740992.0

cdef double[13] LOG_COEF
cdef int _k
for _k in range(13):
    LOG_COEF[_k] = 1.0 / (2 * (12 - _k) + 1)

cdef double[8] A = [3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
                    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
                    3.3430575583588128105e4, 2.5090809287301226727e3]
cdef double[8] B = [1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
                    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
                    5.2264952788528545610e3]
cdef double[8] C = [1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                    2.27238449892691845833e-2, 7.74545014278341407640e-4]
cdef double[8] D = [1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
                    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                    1.05075007164441684324e-9]
cdef double[8] E = [6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                    2.71155556874348757815e-5, 2.01033439929228813265e-7]
cdef double[8] F = [1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
                    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                    2.04426310338993978564e-15]


cdef inline uint64_t _mix(uint64_t x) nogil:
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL
    return x ^ (x >> 31)


cdef inline uint64_t _word(uint64_t skey, uint64_t counter) nogil:
    return _mix(skey + (counter + 1) * GOLDEN)


cdef inline double _horner(double* c, double r) nogil:
    cdef double acc = c[7] * r + c[6]
    cdef int i
    for i in range(5, -1, -1):
        acc = acc * r + c[i]
    return acc


cdef inline double _det_log(double x) nogil:
    cdef int e
    cdef double m = frexp(x, &e)
    cdef double s, s2, p, ed
    cdef int i
    if m < SQRT_HALF:
        m = m * 2.0
        e = e - 1
    ed = <double>e
    s = (m - 1.0) / (m + 1.0)
    s2 = s * s
    p = LOG_COEF[0]
    for i in range(1, 13):
        p = p * s2 + LOG_COEF[i]
    return ed * LN2_HI + (ed * LN2_LO + 2.0 * s * p)


cdef inline double _ndtri(double p) nogil:
    cdef double q = p - 0.5
    cdef double r, val
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _horner(A, r) / _horner(B, r)
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = sqrt(-_det_log(r))
    if r <= 5.0:
        r = r - 1.6
        val = _horner(C, r) / _horner(D, r)
    else:
        r = r - 5.0
        val = _horner(E, r) / _horner(F, r)
    if q < 0.0:
        return -val
    return val


def det_log(x):
    cdef cnp.ndarray[double, ndim=1] a = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(a)
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        out[i] = _det_log(a[i])
    return out.reshape(np.shape(x))


def ndtri(p):
    cdef cnp.ndarray[double, ndim=1] a = np.ascontiguousarray(p, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(a)
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        out[i] = _ndtri(a[i])
    return out.reshape(np.shape(p))


def seed_key(seed):
    return int(_mix(<uint64_t>((int(seed) + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)))


def standard_normals(seed, Py_ssize_t start, Py_ssize_t count):
    cdef uint64_t key = <uint64_t>seed_key(seed)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(count, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef uint64_t sk, w1, w2
    cdef double hi, lo
    with nogil:
        for i in range(count):
            sk = _mix(key + (<uint64_t>(start + i)) * STREAM_MULT)
            w1 = _word(sk, 0)
            w2 = _word(sk, 1)
            hi = <double>(w1 >> 11)
            lo = <double>(w2 >> 11)
            o[i] = _ndtri((hi + (lo + 0.5) * TWO_M53) * TWO_M53)
    return out


def hypercube_matvec(const double[::1] v, const double[::1] diag, double coupling, int n, out=None):
    cdef Py_ssize_t size = v.shape[0]
    if out is None:
        out = np.empty(size, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t s
    cdef int j
    cdef double acc
    with nogil:
        if coupling == 0.0:
            for s in range(size):
                o[s] = diag[s] * v[s]
        else:
            for s in range(size):
                acc = 0.0
                for j in range(n):
                    acc = acc + v[s ^ (<Py_ssize_t>1 << j)]
                o[s] = diag[s] * v[s] + coupling * acc
    return out


def sample_integrate(const double[::1] energies, int n, double t_final, key,
                     Py_ssize_t stream_start, Py_ssize_t count):
    cdef cnp.ndarray[double, ndim=1] integral = np.zeros(count, dtype=np.float64)
    cdef cnp.ndarray[int64_t, ndim=1] jumps = np.zeros(count, dtype=np.int64)
    cdef double[::1] ig = integral
    cdef int64_t[::1] jp = jumps
    cdef uint64_t k64 = <uint64_t>key
    cdef Py_ssize_t i
    cdef uint64_t sk, wt, wf, c
    cdef int64_t state, flip
    cdef double clock, tau, nxt, u, rate = <double>n, acc
    with nogil:
        for i in range(count):
            sk = _mix(k64 + (<uint64_t>(stream_start + i)) * STREAM_MULT)
            state = <int64_t>(_word(sk, 0) >> (64 - n))
            clock = 0.0
            acc = 0.0
            c = 0
            while True:
                wt = _word(sk, 2 * c + 1)
                wf = _word(sk, 2 * c + 2)
                u = (<double>(wt >> 11) + 1.0) * TWO_M53
                tau = -_det_log(u) / rate
                nxt = clock + tau
                if nxt >= t_final:
                    acc = acc + energies[state] * (t_final - clock)
                    break
                acc = acc + energies[state] * tau
                flip = <int64_t>((<double>(wf >> 11)) * TWO_M53 * rate)
                state = state ^ (<int64_t>1 << flip)
                clock = nxt
                jp[i] += 1
                c += 1
            ig[i] = acc
    return integral, jumps
