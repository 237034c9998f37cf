"""Spectral computations for the tilted generator and the QREM operator.

Krylov routines handle any n the vectors fit in memory; the dense
eigendecomposition backend (n <= DENSE_CAP) doubles as the oracle for
them and as the engine for projector and eigenvalue-shift statistics.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from . import analytic
from .krylov import ConvergenceError, ExpmInfo, LanczosResult, expm_multiply_log, lanczos_top
from .operator import (
    DENSE_CAP,
    BoundOperator,
    GeneratorSpec,
    Qrem,
    StateVector,
    bind,
    flat_vector,
    restrict_complement,
)
from .remfield import Landscape, mean_energy


class Method(str, enum.Enum):
    KRYLOV = "krylov"
    DENSE = "dense"


def _start_vector(op: BoundOperator) -> np.ndarray:
    # flat vector plus a deterministic perturbation so no eigenspace is missed
    idx = np.arange(op.size, dtype=np.float64)
    v = 1.0 + 0.1 * np.cos(0.7 * idx + 0.3)
    if op.keep is not None:
        v = np.where(op.keep, v, 0.0)
    return v


def extreme_eigs(spec: GeneratorSpec, field: Landscape, k: int = 1, tol: float = 1e-10,
                 want_vectors: bool = False, max_iter: int = 5000) -> LanczosResult:
    """Top-k eigenvalues (descending) on the operator's active subspace.

    With a mask only the complement subspace is searched, so the zero rows
    of masked configurations never appear as spurious eigenvalues.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    op = bind(spec, field)
    v0 = _start_vector(op)
    if op.keep is not None and not op.keep.any():
        raise ValueError("operator has an empty active subspace")
    return lanczos_top(op.matvec, v0, k=k, tol=tol, max_iter=max_iter, want_vectors=want_vectors)


class DenseSpectrum:
    """Full eigendecomposition of an operator on its active subspace."""

    def __init__(self, spec: GeneratorSpec, field: Landscape, dense_cap: int = DENSE_CAP):
        op = bind(spec, field)
        mat = op.dense(dense_cap)
        if op.keep is not None:
            idx = np.flatnonzero(op.keep)
            mat = mat[np.ix_(idx, idx)]
        else:
            idx = np.arange(op.size)
        self.n = op.n
        self.support = idx
        self.values, self.vectors = np.linalg.eigh(mat)

    def expm_action(self, t: float, v: np.ndarray) -> tuple[np.ndarray, float]:
        c = self.vectors.T @ v[self.support]
        top = float(self.values.max())
        w_sub = self.vectors @ (np.exp(t * (self.values - top)) * c)
        w = np.zeros(1 << self.n)
        w[self.support] = w_sub
        nrm = float(np.linalg.norm(w))
        return w / nrm, t * top + math.log(nrm)

    def log_flat_moment(self, t: float) -> float:
        """ln <-| exp(t A) |->, summed in log space over the eigenbasis."""
        c = self.vectors.T @ np.full(self.support.size, 2.0 ** (-self.n / 2.0))
        return float(logsumexp(t * self.values, b=c * c))


def expm_action(spec: GeneratorSpec, field: Landscape, t: float, v: StateVector,
                tol: float = 1e-12, method: Method = Method.KRYLOV,
                info: Optional[ExpmInfo] = None) -> StateVector:
    """exp(t Op) v with the norm carried in ``log_scale``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if v.n != spec.n:
        raise ValueError("vector and operator sizes differ")
    if t == 0:
        return StateVector(v.n, v.entries.copy(), v.log_scale)
    if Method(method) is Method.DENSE:
        w, ls = DenseSpectrum(spec, field).expm_action(t, v.entries)
    else:
        op = bind(spec, field)
        w, ls = expm_multiply_log(op.matvec, v.entries, t, tol=tol, info=info)
    return StateVector(v.n, w, v.log_scale + ls)


@dataclass
class ScgfRecord:
    n: int
    t: float
    lam: float
    s: float
    seed: int
    theta_n: float
    theta_limit: float
    method: str
    krylov_dim: int = 0
    substeps: int = 0
    residual_estimate: float = 0.0
    log_z: float = dc_field(default=math.nan, repr=False)

    @property
    def gap(self) -> float:
        return self.theta_n - self.theta_limit


def log_moment(field: Landscape, t: float, lam: float, s: float = 0.0,
               method: Method = Method.KRYLOV, tol: float = 1e-12,
               info: Optional[ExpmInfo] = None) -> float:
    """ln Z(t, lam, s) = ln <-| exp(t W_{lam,s}) |->."""
    spec = GeneratorSpec.tilted(field.n, lam, s)
    if Method(method) is Method.DENSE:
        return DenseSpectrum(spec, field).log_flat_moment(t)
    w = expm_action(spec, field, t, flat_vector(field.n), tol=tol, info=info)
    return w.log_inner_flat()


def scgf_finite(field: Landscape, t: float, lam: float, s: float = 0.0,
                method: Method = Method.KRYLOV, tol: float = 1e-12) -> ScgfRecord:
    """theta_N = ln Z / (n t) for one landscape."""
    if not t > 0:
        raise ValueError("t must be positive")
    info = ExpmInfo()
    lz = log_moment(field, t, lam, s, method=method, tol=tol, info=info)
    return ScgfRecord(
        n=field.n, t=t, lam=lam, s=s, seed=getattr(field, "seed", 0),
        theta_n=lz / (field.n * t), theta_limit=analytic.theta_limit(t, lam, s),
        method=Method(method).value, krylov_dim=info.krylov_dim, substeps=info.substeps,
        residual_estimate=info.residual_estimate, log_z=lz,
    )


@dataclass(frozen=True)
class JensenBounds:
    mean_field: float  # t n (e^-s - 1) + (t lam / 2^n) sum U
    diagonal: float  # -t n + ln(2^-n sum exp(t lam U))


def jensen_bounds(field: Landscape, t: float, lam: float, s: float = 0.0) -> JensenBounds:
    """The two exact lower bounds on ln Z(t, lam, s)."""
    n = field.n
    u = field.table()
    first = t * n * (math.exp(-s) - 1.0) + t * lam * mean_energy(field)
    second = -t * n + float(logsumexp(t * lam * u)) - n * math.log(2.0)
    return JensenBounds(first, second)


@dataclass
class SpectralSummary:
    n: int
    gamma: float
    lam: float
    seed: int
    threshold: float
    eigenvalues_above: np.ndarray
    flat_overlaps: np.ndarray
    trace_above: int
    shift_sup: float
    flat_projection: float
    overlap_total: Optional[float] = None

    @property
    def log_rate(self) -> float:
        """-(1/n) ln <-|Q|->, +inf when the projection vanishes."""
        if self.flat_projection <= 0:
            return math.inf
        return -math.log(self.flat_projection) / self.n


def _classical_order(u: np.ndarray) -> np.ndarray:
    # ascending energies, ties broken by configuration index
    return np.argsort(u, kind="stable")


def _top_qrem_spectrum(field: Landscape, gamma: float, lam: float, threshold: float,
                       full: bool, want_vectors: bool = True):
    """Eigenvalues of gamma T - lam U above ``threshold`` (descending), their
    flat overlaps, and the total overlap when the whole spectrum was computed."""
    n = field.n
    if n > DENSE_CAP:
        raise ValueError(f"dense spectral statistics are limited to n <= {DENSE_CAP}")
    u = field.table()
    if gamma == 0.0:
        ev = -lam * u
        sel = np.flatnonzero(ev > threshold)
        vals = ev[sel]
        order = np.argsort(-vals, kind="stable")
        vals = vals[order]
        overlaps = np.full(vals.size, 2.0 ** (-n))
        return vals, overlaps, (1.0 if full else None)
    mat = bind(GeneratorSpec.qrem(n, gamma, lam), field).dense()
    flat = np.full(1 << n, 2.0 ** (-n / 2.0))
    if full:
        if want_vectors:
            w, vecs = np.linalg.eigh(mat)
            ov = (vecs.T @ flat) ** 2
            total = float(ov.sum())
        else:
            w = np.linalg.eigvalsh(mat)
            ov, total = None, None
    else:
        if want_vectors:
            w, vecs = scipy.linalg.eigh(mat, subset_by_value=(threshold, np.inf), driver="evr")
            ov = (vecs.T @ flat) ** 2
        else:
            w = scipy.linalg.eigh(mat, subset_by_value=(threshold, np.inf), driver="evr",
                                  eigvals_only=True)
            ov = None
        total = None
    sel = np.flatnonzero(w > threshold)
    order = sel[np.argsort(-w[sel], kind="stable")]
    vals = w[order]
    overlaps = ov[order] if ov is not None else np.full(vals.size, math.nan)
    return vals, overlaps, total


def _shift_values(u: np.ndarray, lam: float, eigen_desc: np.ndarray):
    order = _classical_order(u)[: eigen_desc.size]
    shifts = eigen_desc + lam * u[order]
    return shifts, order


def projector_overlap(field: Landscape, gamma: float, lam: float, delta: float,
                      full: bool = True) -> SpectralSummary:
    """<-| Q |-> for the spectral projection of gamma T - lam U onto (delta lam n, inf).

    ``full=False`` only computes eigenpairs above the threshold (subset
    eigensolver); ``overlap_total`` is then unavailable.
    """
    n = field.n
    thr = delta * lam * n
    vals, ov, total = _top_qrem_spectrum(field, gamma, lam, thr, full)
    shifts, _ = _shift_values(field.table(), lam, vals)
    return SpectralSummary(
        n=n, gamma=gamma, lam=lam, seed=getattr(field, "seed", 0), threshold=thr,
        eigenvalues_above=vals, flat_overlaps=ov, trace_above=int(vals.size),
        shift_sup=float(np.abs(shifts).max()) if shifts.size else 0.0,
        flat_projection=float(ov.sum()), overlap_total=total,
    )


@dataclass
class ShiftStatistic:
    shift_sup: float
    ratio: float  # shift_sup / sqrt(n)
    shifts: np.ndarray
    configurations: np.ndarray
    trace_above: int


def shift_statistic(field: Landscape, gamma: float, lam: float, delta: float) -> ShiftStatistic:
    """Pair the j-th largest QREM eigenvalue above delta lam n with the j-th
    lowest classical energy and report sup_j |E_j + lam U(sigma_j)|."""
    if not lam * delta > gamma:
        raise ValueError(
            f"shift statistic needs lam*delta > gamma (got {lam * delta} <= {gamma}): "
            "below that threshold eigenvalues are not tied to classical levels"
        )
    n = field.n
    vals, _, _ = _top_qrem_spectrum(field, gamma, lam, delta * lam * n, full=False,
                                    want_vectors=False)
    shifts, order = _shift_values(field.table(), lam, vals)
    sup = float(np.abs(shifts).max()) if shifts.size else 0.0
    return ShiftStatistic(sup, sup / math.sqrt(n), shifts, order, int(vals.size))


@dataclass
class PhiReport:
    E: float
    eta: float
    members: np.ndarray
    restricted_top: float
    values: dict  # k -> phi^{(k)}(sigma) over members; k = 0 is phi(E)
    max_abs: dict
    bounds: dict
    passed: dict

    @property
    def all_pass(self) -> bool:
        return all(self.passed.values())

    def margin(self, k: int) -> float:
        return self.bounds[k] - self.max_abs[k]


def phi_bounds(gamma: float, lam: float, delta: float, eps: float, n: int, k_max: int) -> dict:
    gap = lam * delta - gamma
    bounds = {0: 1.0 + 2.0 * gamma / gap * (delta / eps)}
    for k in range(1, k_max + 1):
        bounds[k] = gamma / n**k * (2.0 / gap * (delta / eps)) ** (k + 1)
    return bounds


def phi_vector_check(field: Landscape, gamma: float, lam: float, delta: float, eps: float,
                     E: float, k_max: int = 2, tol: float = 1e-13) -> PhiReport:
    """Boundary vector phi(E) on L_eta, eta = delta - eps, and its E-derivatives.

    phi(E)(sigma) = 1 + sqrt(2^n) (A* R(E) 1^> |->)(sigma) and
    phi^{(k)}(E)(sigma) = (-1)^k sqrt(2^n) (A* R(E)^{k+1} 1^> |->)(sigma), with
    R the resolvent of the QREM operator restricted to the complement of
    L_eta and A the coupling from L_eta into the complement.
    """
    from .resolvent import ResolventError, solve_restricted

    if not lam * delta > gamma:
        raise ValueError("need lam*delta > gamma")
    if not 0 < eps < delta - gamma / lam:
        raise ValueError(f"eps must lie in (0, {delta - gamma / lam}), got {eps}")
    n = field.n
    eta = delta - eps
    spec, coupling = restrict_complement(GeneratorSpec.qrem(n, gamma, lam), field, eta)
    members = np.flatnonzero(coupling.inside)
    bounds = phi_bounds(gamma, lam, delta, eps, n, k_max)
    if members.size == 0:
        return PhiReport(E, eta, members, math.nan, {}, {k: 0.0 for k in bounds}, bounds,
                         {k: True for k in bounds})
    top = float(extreme_eigs(spec, field, k=1).values[0])
    if not E > top:
        raise ResolventError(f"E={E} is not above the restricted spectrum (top={top})", top=top)
    root = math.sqrt(float(1 << n))
    x = np.where(coupling.inside, 0.0, 2.0 ** (-n / 2.0))
    values, max_abs, passed = {}, {}, {}
    for k in range(0, k_max + 1):
        x = solve_restricted(spec, field, E, x, tol=tol)
        adj = coupling.adjoint(x)[members]
        vals = 1.0 + root * adj if k == 0 else (-1.0) ** k * root * adj
        values[k] = vals
        max_abs[k] = float(np.abs(vals).max())
        passed[k] = max_abs[k] <= bounds[k]
    return PhiReport(E, eta, members, top, values, max_abs, bounds, passed)
