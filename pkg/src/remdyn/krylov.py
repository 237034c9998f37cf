"""Krylov-space numerics on a symmetric matvec: Lanczos, exp action, CG."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

Matvec = Callable[[np.ndarray], np.ndarray]

BASIS_BYTES = 512 * 1024 * 1024


class ConvergenceError(RuntimeError):
    """Raised when an iteration stops short of its tolerance.

    ``best`` holds the last estimate and ``residual`` its error indicator.
    """

    def __init__(self, message: str, best=None, residual: float = math.nan):
        super().__init__(message)
        self.best = best
        self.residual = residual


def basis_limit(size: int, cap: int) -> int:
    return max(8, min(cap, BASIS_BYTES // (8 * size)))


def _reorth(w: np.ndarray, basis: np.ndarray) -> None:
    # two passes of classical Gram-Schmidt
    for _ in range(2):
        w -= basis.T @ (basis @ w)


@dataclass
class LanczosResult:
    values: np.ndarray
    vectors: Optional[np.ndarray]
    residuals: np.ndarray
    iterations: int


def lanczos_top(matvec: Matvec, v0: np.ndarray, k: int = 1, tol: float = 1e-10,
                max_iter: int = 2000, want_vectors: bool = False,
                max_basis: Optional[int] = None) -> LanczosResult:
    """Largest ``k`` eigenvalues of a symmetric operator restricted to the
    cyclic space of ``v0``, with full reorthogonalization and explicit
    restarts when the basis budget is exhausted.

    Convergence: ``|beta_m * s_{m,i}| <= tol * max(1, |theta_i|)`` for the top k
    Ritz pairs.
    """
    size = v0.size
    m_cap = min(size, max_basis or basis_limit(size, 300))
    start = np.array(v0, dtype=np.float64)
    total = 0
    best = None
    while True:
        nrm = np.linalg.norm(start)
        if nrm == 0:
            raise ValueError("starting vector is zero")
        basis = np.zeros((m_cap, size))
        basis[0] = start / nrm
        alpha, beta = [], []
        converged = False
        j = 0
        while True:
            w = matvec(basis[j])
            total += 1
            a = float(basis[j] @ w)
            alpha.append(a)
            w -= a * basis[j]
            if j > 0:
                w -= beta[-1] * basis[j - 1]
            _reorth(w, basis[: j + 1])
            b = float(np.linalg.norm(w))
            m = j + 1
            kk = min(k, m)
            check = m >= kk and (m % 5 == 0 or b < 1e-12 or m == m_cap or m == size)
            if check:
                theta, s = eigh_tridiagonal(np.array(alpha), np.array(beta)) if m > 1 else (
                    np.array(alpha), np.ones((1, 1)))
                order = np.argsort(theta)[::-1][:kk]
                res = np.abs(b * s[-1, order])
                best = (theta[order], s[:, order], res, m)
                scale = np.maximum(1.0, np.abs(theta[order]))
                if (m >= k and np.all(res <= tol * scale)) or b < 1e-12 or m == size:
                    converged = True
                    break
            if m == m_cap or total >= max_iter:
                break
            beta.append(b)
            basis[j + 1] = w / b
            j += 1
        theta_top, s_top, res, m = best
        if converged or m >= size:
            vecs = basis[:m].T @ s_top if want_vectors else None
            return LanczosResult(theta_top, vecs, res, total)
        if total >= max_iter:
            vecs = basis[:m].T @ s_top if want_vectors else None
            raise ConvergenceError(
                f"Lanczos did not converge in {total} matvecs",
                best=LanczosResult(theta_top, vecs, res, total),
                residual=float(res.max()),
            )
        # restart from the current top Ritz vectors
        start = basis[:m].T @ s_top.sum(axis=1)


@dataclass
class ExpmInfo:
    substeps: int = 0
    krylov_dim: int = 0
    matvecs: int = 0
    residual_estimate: float = 0.0


def _exp_tridiag(alpha, beta, dt):
    """exp(dt T) e_1 scaled by exp(-dt theta_max); returns (y, theta_max)."""
    if len(alpha) == 1:
        return np.ones(1), alpha[0]
    theta, s = eigh_tridiagonal(np.asarray(alpha), np.asarray(beta))
    top = float(theta.max())
    y = s @ (np.exp(dt * (theta - top)) * s[0])
    return y, top


def expm_multiply_log(matvec: Matvec, v: np.ndarray, t: float, tol: float = 1e-12,
                      m_max: int = 80, max_substeps: int = 1 << 20,
                      info: Optional[ExpmInfo] = None) -> tuple[np.ndarray, float]:
    """exp(t A) v as (unit vector, log scale), A symmetric.

    Each substep builds a Lanczos basis from the current unit vector and
    takes the largest step dt (halving from the remaining time) whose
    last-component error estimate ``beta_m |[exp(dt T_m) e_1]_m|`` is below
    ``tol`` relative to the propagated norm. The norm is moved into the log
    scale after every substep so nothing overflows.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    info = info if info is not None else ExpmInfo()
    w = np.array(v, dtype=np.float64)
    nrm = float(np.linalg.norm(w))
    if nrm == 0.0:
        raise ValueError("cannot propagate the zero vector")
    log_scale = math.log(nrm)
    w /= nrm
    if t == 0.0:
        return w, log_scale
    size = w.size
    m_cap = min(size, basis_limit(size, m_max))
    remaining = t
    dt_hint = t
    while remaining > 0.0:
        basis = np.zeros((m_cap, size))
        basis[0] = w
        alpha, beta = [], []
        j = 0
        accepted = None
        while True:
            x = matvec(basis[j])
            info.matvecs += 1
            a = float(basis[j] @ x)
            alpha.append(a)
            x -= a * basis[j]
            if j > 0:
                x -= beta[-1] * basis[j - 1]
            _reorth(x, basis[: j + 1])
            b = float(np.linalg.norm(x))
            m = j + 1
            breakdown = b <= 1e-13 * max(1.0, abs(a))
            if breakdown or m == m_cap or (m >= 6 and m % 4 == 0):
                dt = min(dt_hint, remaining)
                while True:
                    y, top = _exp_tridiag(alpha, beta, dt)
                    ynorm = float(np.linalg.norm(y))
                    err = 0.0 if breakdown else b * abs(y[-1]) / ynorm
                    if err <= tol:
                        accepted = (dt, y, top, ynorm, err)
                        break
                    if m < m_cap:
                        break  # extend the basis before shrinking the step
                    dt *= 0.5
                    if info.substeps > max_substeps or dt < t * 2.0 ** -60:
                        raise ConvergenceError(
                            f"Krylov exponential stalled: err={err:.3e} at dt={dt:.3e}",
                            residual=err,
                        )
                if accepted is not None:
                    break
            beta.append(b)
            basis[j + 1] = x / b
            j += 1
        dt, y, top, ynorm, err = accepted
        w = basis[: len(y)].T @ (y / ynorm)
        wn = float(np.linalg.norm(w))
        w /= wn
        log_scale += dt * top + math.log(ynorm) + math.log(wn)
        remaining -= dt
        if remaining < t * 1e-15:
            remaining = 0.0
        info.substeps += 1
        info.krylov_dim = max(info.krylov_dim, len(y))
        info.residual_estimate = max(info.residual_estimate, err)
        if info.substeps > max_substeps:
            raise ConvergenceError("too many Krylov substeps", residual=err)
        dt_hint = dt if dt < remaining else remaining
        if len(y) < m_cap // 2:
            dt_hint = 2.0 * dt_hint
    return w, log_scale


def conjugate_gradient(matvec: Matvec, rhs: np.ndarray, tol: float = 1e-12,
                       max_iter: Optional[int] = None, x0: Optional[np.ndarray] = None):
    """Solve M x = rhs for symmetric positive definite M.

    Stops when ``||rhs - M x|| <= tol * ||rhs||`` (true residual checked at exit).
    Returns (x, relative residual, iterations).
    """
    b = np.asarray(rhs, dtype=np.float64)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0.0, 0
    max_iter = max_iter or 10 * b.size + 100
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - matvec(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = float(r @ r)
    it = 0
    while it < max_iter:
        if math.sqrt(rr) <= tol * bnorm:
            rel = float(np.linalg.norm(b - matvec(x))) / bnorm
            if rel <= tol:
                return x, rel, it
            r = b - matvec(x)
            p = r.copy()
            rr = float(r @ r)
        q = matvec(p)
        pq = float(p @ q)
        if pq <= 0:
            raise ConvergenceError("operator is not positive definite on the Krylov space",
                                   best=x, residual=math.sqrt(rr) / bnorm)
        step = rr / pq
        x += step * p
        r -= step * q
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
    rel = float(np.linalg.norm(b - matvec(x))) / bnorm
    if rel <= tol:
        return x, rel, it
    raise ConvergenceError(f"CG did not reach tol={tol} in {it} iterations", best=x, residual=rel)
