"""Resolvent R(E) = (E - H)^{-1} of H = gamma T - lam U above the spectrum.

In the regime E > max spec(H) the shifted operator E - H is positive
definite, so solves use conjugate gradients (dense LU for oracles). The
l^1 report compares sqrt(2^n) <-|R(E)|sigma> against the bound

    1 / (E - gamma n (1 + gamma_N(E))) * E / (E + lam U(sigma)),

i.e. the deterministic estimate for H = gamma T - V applied with V = lam U.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._backend import kernels
from .krylov import conjugate_gradient
from .operator import GeneratorSpec, StateVector, bind
from .remfield import Landscape

L1_SLACK = 1e-10


class ResolventError(ValueError):
    """E is not admissible, or a precondition of a bound fails."""

    def __init__(self, message: str, top: Optional[float] = None, failures=()):
        super().__init__(message)
        self.top = top
        self.failures = tuple(failures)


def spectral_margin(n: int) -> float:
    return 1e-6 * n


def top_eigenvalue(spec: GeneratorSpec, field: Landscape) -> float:
    from .spectral import extreme_eigs

    return float(extreme_eigs(spec, field, k=1, tol=1e-12).values[0])


def _shifted(op, E):
    def mv(x):
        y = op.matvec(x)
        np.subtract(E * x, y, out=y)
        if op.keep is not None:
            y[~op.keep] = 0.0
        return y

    return mv


def solve_restricted(spec: GeneratorSpec, field: Landscape, E: float, rhs: np.ndarray,
                     tol: float = 1e-12) -> np.ndarray:
    """(E - Op)^{-1} rhs on the operator's active subspace, no spectrum check."""
    op = bind(spec, field)
    b = np.asarray(rhs, dtype=np.float64)
    if op.keep is not None:
        b = np.where(op.keep, b, 0.0)
    if op.coupling == 0.0:
        x = b / (E - op.diag)
        if op.keep is not None:
            x[~op.keep] = 0.0
        return x
    x, _, _ = conjugate_gradient(_shifted(op, E), b, tol=tol)
    return x


def solve_resolvent(spec: GeneratorSpec, field: Landscape, E: float, rhs: StateVector,
                    tol: float = 1e-12, method: str = "cg", check: bool = True) -> StateVector:
    """x with ||(E - Op) x - rhs|| <= tol ||rhs|| (in entries; log_scale carried)."""
    if rhs.n != spec.n:
        raise ValueError("rhs and operator sizes differ")
    if check:
        top = top_eigenvalue(spec, field)
        if not E >= top + spectral_margin(spec.n):
            raise ResolventError(
                f"E={E} is within {spectral_margin(spec.n):g} of the spectrum (top eigenvalue {top})",
                top=top,
            )
    if method == "dense":
        op = bind(spec, field)
        mat = E * np.eye(op.size) - op.dense()
        x = np.linalg.solve(mat, rhs.entries)
    elif method == "cg":
        x = solve_restricted(spec, field, E, rhs.entries, tol=tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    return StateVector(spec.n, x, rhs.log_scale)


def negative_part(field: Landscape, lam: float = 1.0, eta: Optional[float] = None) -> np.ndarray:
    """max(-lam U, 0); with ``eta`` only levels in (-eta n, 0] count."""
    v = lam * field.table()
    if eta is None:
        return np.maximum(-v, 0.0)
    keep = (v > -eta * field.n) & (v <= 0.0)
    return np.where(keep, -v, 0.0)


def gamma_n(field: Landscape, E: float, lam: float = 1.0, eta: Optional[float] = None) -> float:
    """sup_sigma (1/n) sum_{tau ~ sigma} V_-(tau) / (E - V_-(tau)), V = lam U."""
    neg = negative_part(field, lam, eta)
    bad = np.flatnonzero(neg >= E)
    if bad.size:
        tau = int(bad[0])
        raise ResolventError(f"singular summand: E={E} <= negative part {neg[tau]} at tau={tau}")
    g = neg / (E - neg)
    sums = kernels.hypercube_matvec(g, np.zeros_like(g), 1.0, field.n)
    return float(sums.max()) / field.n


@dataclass
class ResolventReport:
    n: int
    gamma: float
    lam: float
    E: float
    gamma_n_value: float
    condition_ok: bool
    lhs: np.ndarray  # sqrt(2^n) <-|R(E)|sigma>
    rhs: np.ndarray  # bound per sigma
    all_pass: bool
    l1_norm: float
    top_eigenvalue: float

    @property
    def per_sigma(self):
        return list(zip(self.lhs.tolist(), self.rhs.tolist()))

    @property
    def worst_margin(self) -> float:
        return float((self.rhs - self.lhs).min())


def admissible_energy(field: Landscape, gamma: float, lam: float, factor: float = 1.5) -> float:
    """factor * max(gamma n, lam max|U|, top eigenvalue + margin)."""
    n = field.n
    top = top_eigenvalue(GeneratorSpec.qrem(n, gamma, lam), field)
    return factor * max(gamma * n, lam * float(np.abs(field.table()).max()), top + spectral_margin(n))


def l1_bound_report(field: Landscape, gamma: float, lam: float, E: float,
                    tol: float = 1e-13) -> ResolventReport:
    n = field.n
    spec = GeneratorSpec.qrem(n, gamma, lam)
    u = field.table()
    top = top_eigenvalue(spec, field) if gamma != 0.0 else float((-lam * u).max())
    failures = []
    if not E >= top + spectral_margin(n):
        failures.append(f"E={E} not above max spec(H)={top}")
    if not E > gamma * n:
        failures.append(f"E={E} not above gamma*n={gamma * n}")
    if not E > float((-lam * u).max()):
        failures.append(f"E={E} not above -inf(lam U)={float((-lam * u).max())}")
    if failures:
        raise ResolventError("; ".join(failures), top=top, failures=failures)
    g = gamma_n(field, E, lam)
    condition_ok = gamma == 0.0 or g < (E - gamma * n) / (gamma * n)
    if not condition_ok:
        raise ResolventError(
            f"gamma_N(E)={g} violates gamma_N < (E - gamma n)/(gamma n)",
            top=top, failures=["gamma_N condition"],
        )
    flat = np.full(1 << n, 2.0 ** (-n / 2.0))
    x = solve_restricted(spec, field, E, flat, tol=tol)
    lhs = math.sqrt(float(1 << n)) * x
    rhs = (1.0 / (E - gamma * n * (1.0 + g))) * (E / (E + lam * u))
    return ResolventReport(
        n=n, gamma=gamma, lam=lam, E=E, gamma_n_value=g, condition_ok=condition_ok,
        lhs=lhs, rhs=rhs, all_pass=bool(np.all(lhs <= rhs + L1_SLACK)),
        l1_norm=float(lhs.max()), top_eigenvalue=top,
    )


def dense_resolvent(spec: GeneratorSpec, field: Landscape, E: float) -> np.ndarray:
    op = bind(spec, field)
    return np.linalg.inv(E * np.eye(op.size) - op.dense())


def potential_resolvent(potential: np.ndarray, gamma: float, E: float) -> np.ndarray:
    """Dense (E - gamma T + V)^{-1} for an arbitrary potential V (oracle use)."""
    v = np.asarray(potential, dtype=np.float64)
    n = int(round(math.log2(v.size)))
    idx = np.arange(v.size)
    mat = np.diag(E + v)
    for j in range(n):
        mat[idx, idx ^ (1 << j)] -= gamma
    return np.linalg.inv(mat)


def operator_norms(mat: np.ndarray) -> dict:
    """l^1, l^2 and l^inf operator norms of a dense matrix."""
    return {
        "l1": float(np.abs(mat).sum(axis=0).max()),
        "l2": float(np.linalg.norm(mat, 2)),
        "linf": float(np.abs(mat).sum(axis=1).max()),
    }
