"""Matrix-free operators on l^2 of the Hamming cube.

Configurations are bit-packed integers, sigma_j = 1 - 2 * bit_j, so the
neighbor across spin j is ``sigma ^ (1 << j)``. Two operator families:

* ``TiltedMarkov(lam, s)``: e^{-s} T - n + lam U (tilted generator, +lam U
  convention everywhere; the moment generating function of exp(-lam U_t)
  is the same object with lam -> -lam).
* ``Qrem(gamma, lam)``: gamma T - lam U.

An optional mask removes configurations: masked rows and columns are
zero, which confines the operator to the complement subspace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ._backend import kernels
from .remfield import Landscape, extreme_mask

MAX_VECTOR_N = 26
DENSE_CAP = 12


@dataclass(frozen=True)
class TiltedMarkov:
    lam: float
    s: float = 0.0


@dataclass(frozen=True)
class Qrem:
    gamma: float
    lam: float


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    n: int
    kind: Union[TiltedMarkov, Qrem]
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=bool)
            if m.shape != (1 << self.n,):
                raise ValueError("mask must have one entry per configuration")
            object.__setattr__(self, "mask", m)

    @classmethod
    def tilted(cls, n: int, lam: float, s: float = 0.0) -> "GeneratorSpec":
        return cls(n, TiltedMarkov(lam, s))

    @classmethod
    def qrem(cls, n: int, gamma: float, lam: float) -> "GeneratorSpec":
        return cls(n, Qrem(gamma, lam))


@dataclass
class StateVector:
    """A vector represented as exp(log_scale) * entries."""

    n: int
    entries: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self):
        self.entries = np.ascontiguousarray(self.entries, dtype=np.float64)
        if self.entries.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} entries, got {self.entries.shape}")
        if not math.isfinite(self.log_scale):
            raise ValueError("log_scale must be finite")

    def log_inner_flat(self) -> float:
        """ln <-|v>, requiring a positive inner product."""
        ip = float(self.entries.sum()) / math.sqrt(self.entries.size)
        if not ip > 0:
            raise ArithmeticError(f"non-positive flat overlap {ip!r}")
        return self.log_scale + math.log(ip)

    def dense(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.entries


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_VECTOR_N:
        raise ValueError(f"vectors are limited to 1 <= n <= {MAX_VECTOR_N}, got n={n}")


def flat_vector(n: int) -> StateVector:
    _check_n(n)
    return StateVector(n, np.full(1 << n, 2.0 ** (-n / 2.0)), 0.0)


def basis_vector(n: int, sigma: int) -> StateVector:
    _check_n(n)
    e = np.zeros(1 << n)
    e[sigma] = 1.0
    return StateVector(n, e)


class BoundOperator:
    """An operator spec bound to a landscape: diagonal, coupling and mask."""

    def __init__(self, spec: GeneratorSpec, field: Landscape):
        if spec.n != field.n:
            raise ValueError(f"operator n={spec.n} does not match landscape n={field.n}")
        _check_n(spec.n)
        self.spec = spec
        self.n = spec.n
        u = field.table()
        k = spec.kind
        if isinstance(k, TiltedMarkov):
            self.coupling = math.exp(-k.s)
            diag = -float(spec.n) + k.lam * u
        elif isinstance(k, Qrem):
            self.coupling = float(k.gamma)
            diag = -k.lam * u
        else:
            raise TypeError(f"unknown operator kind {k!r}")
        self.keep = None if spec.mask is None else ~spec.mask
        if self.keep is not None:
            diag = np.where(self.keep, diag, 0.0)
        self.diag = np.ascontiguousarray(diag, dtype=np.float64)
        self.size = 1 << self.n

    def matvec(self, x: np.ndarray, out: Optional[np.ndarray] = None) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if self.keep is not None:
            x = np.where(self.keep, x, 0.0)
        y = kernels.hypercube_matvec(x, self.diag, self.coupling, self.n, out)
        if self.keep is not None:
            y[~self.keep] = 0.0
        return y

    def dense(self, dense_cap: int = DENSE_CAP) -> np.ndarray:
        if self.n > dense_cap:
            raise ValueError(f"dense materialization limited to n <= {dense_cap}")
        size = self.size
        mat = np.zeros((size, size))
        idx = np.arange(size)
        for j in range(self.n):
            mat[idx, idx ^ (1 << j)] = self.coupling
        mat[idx, idx] = self.diag
        if self.keep is not None:
            mat[~self.keep, :] = 0.0
            mat[:, ~self.keep] = 0.0
        return mat

    def diagonal_bounds(self) -> tuple[float, float]:
        """Gershgorin interval enclosing the spectrum on the active subspace."""
        d = self.diag if self.keep is None else self.diag[self.keep]
        r = abs(self.coupling) * self.n
        return float(d.min()) - r, float(d.max()) + r


def bind(spec: GeneratorSpec, field: Landscape) -> BoundOperator:
    return BoundOperator(spec, field)


def apply(spec: GeneratorSpec, field: Landscape, v: StateVector) -> StateVector:
    if v.n != spec.n:
        raise ValueError(f"vector n={v.n} does not match operator n={spec.n}")
    op = BoundOperator(spec, field)
    return StateVector(v.n, op.matvec(v.entries), v.log_scale)


def materialize_dense(spec: GeneratorSpec, field: Landscape, dense_cap: int = DENSE_CAP) -> np.ndarray:
    return BoundOperator(spec, field).dense(dense_cap)


@dataclass(frozen=True, eq=False)
class BoundaryCoupling:
    """A = 1^> gamma T 1^<, mapping l^2(L_eta) into its complement."""

    n: int
    gamma: float
    inside: np.ndarray  # membership of L_eta

    def apply(self, x: np.ndarray) -> np.ndarray:
        src = np.where(self.inside, x, 0.0)
        y = kernels.hypercube_matvec(src, np.zeros(src.size), self.gamma, self.n)
        y[self.inside] = 0.0
        return y

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        src = np.where(self.inside, 0.0, y)
        x = kernels.hypercube_matvec(src, np.zeros(src.size), self.gamma, self.n)
        x[~self.inside] = 0.0
        return x


def restrict_complement(spec: GeneratorSpec, field: Landscape, eta: float):
    """Restrict a QREM operator to configurations with U >= -eta n.

    Returns ``(restricted_spec, A)`` where the mask is the full extreme set
    L_eta and ``A`` is the coupling from L_eta into the complement.
    """
    if not isinstance(spec.kind, Qrem):
        raise TypeError("restriction is defined for QREM operators only")
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta!r}")
    inside = extreme_mask(field, eta)
    restricted = GeneratorSpec(spec.n, spec.kind, mask=inside)
    return restricted, BoundaryCoupling(spec.n, float(spec.kind.gamma), inside)
