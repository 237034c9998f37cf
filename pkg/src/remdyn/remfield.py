"""Random Energy Model landscapes on the Hamming cube {0, ..., 2^n - 1}.

``RemField`` draws U(sigma) = sqrt(n) * z(seed, sigma) from a counter-based
generator, so any single value is available without materializing the
table and the table is bit-reproducible across runs, platforms and kernel
backends. ``TabulatedField`` wraps an explicit array (synthetic landscapes
for tests and oracles) behind the same interface.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Iterator, NamedTuple

import numpy as np

from ._backend import kernels
from .analytic import BETA_C, LN2

MAX_N = 30
TABLE_CAP = 24
CHUNK = 1 << 20


class Landscape:
    """Shared scans over a landscape with ``n`` spins."""

    n: int

    @property
    def size(self) -> int:
        return 1 << self.n

    def chunks(self) -> Iterator[tuple[int, np.ndarray]]:
        """Yield (start, values) blocks in index order."""
        raise NotImplementedError

    def table(self) -> np.ndarray:
        raise NotImplementedError

    def _check_sigma(self, sigma: int) -> None:
        if not 0 <= sigma < self.size:
            raise IndexError(f"configuration {sigma} outside [0, 2^{self.n})")

    def _guard(self) -> None:
        if self.n > MAX_N:
            raise ValueError(f"full scans are limited to n <= {MAX_N}, got n={self.n}")


@dataclass(frozen=True)
class RemField(Landscape):
    seed: int
    n: int
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise ValueError(f"n must lie in [1, {MAX_N}], got {self.n}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def scale(self) -> float:
        return math.sqrt(self.n)

    def energy(self, sigma: int) -> float:
        self._check_sigma(sigma)
        return float(self.scale * kernels.standard_normals(self.seed, int(sigma), 1)[0])

    def values(self, start: int, count: int) -> np.ndarray:
        return self.scale * kernels.standard_normals(self.seed, start, count)

    def chunks(self):
        self._guard()
        if "table" in self._cache:
            yield 0, self._cache["table"]
            return
        for start in range(0, self.size, CHUNK):
            yield start, self.values(start, min(CHUNK, self.size - start))

    def table(self) -> np.ndarray:
        """Full energy table (read-only, cached for n <= TABLE_CAP)."""
        tab = self._cache.get("table")
        if tab is None:
            if self.n > TABLE_CAP:
                raise MemoryError(f"refusing to materialize 2^{self.n} energies")
            tab = self.values(0, self.size)
            tab.flags.writeable = False
            self._cache["table"] = tab
        return tab


class TabulatedField(Landscape):
    """Landscape given by an explicit array of 2^n energies."""

    def __init__(self, values, seed: int = 0):
        vals = np.array(values, dtype=np.float64)
        n = int(round(math.log2(vals.size))) if vals.size else -1
        if vals.ndim != 1 or n < 1 or (1 << n) != vals.size:
            raise ValueError("tabulated landscape needs 2^n values, n >= 1")
        vals.flags.writeable = False
        self.n = n
        self.seed = seed
        self._values = vals

    @classmethod
    def constant(cls, n: int, c: float) -> "TabulatedField":
        return cls(np.full(1 << n, float(c)))

    @property
    def scale(self) -> float:
        return math.sqrt(self.n)

    def energy(self, sigma: int) -> float:
        self._check_sigma(sigma)
        return float(self._values[sigma])

    def chunks(self):
        yield 0, self._values

    def table(self) -> np.ndarray:
        return self._values

    def shifted(self, c) -> "TabulatedField":
        return TabulatedField(self._values + c, seed=self.seed)


@dataclass(frozen=True)
class ExtremeSet:
    delta: float
    count: int
    members: tuple
    n: int
    seed: int


class MinEnergy(NamedTuple):
    value: float
    argmin: int
    asymptote: float


def extreme_set(field: Landscape, delta: float, member_cap: int = 1024) -> ExtremeSet:
    """Configurations with U(sigma) < -delta * n; exact count by full scan."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    field._guard()
    cut = -delta * field.n
    count = 0
    members: list[int] = []
    for start, vals in field.chunks():
        hits = np.flatnonzero(vals < cut)
        count += hits.size
        room = member_cap - len(members)
        if room > 0:
            members.extend(int(h) + start for h in hits[:room])
    return ExtremeSet(delta=delta, count=count, members=tuple(members),
                      n=field.n, seed=getattr(field, "seed", 0))


def extreme_mask(field: Landscape, delta: float) -> np.ndarray:
    """Boolean membership of the full extreme set (no cap)."""
    return field.table() < -delta * field.n


def empirical_pressure(field: Landscape, beta: float) -> float:
    """(1/n) ln(2^-n sum_sigma exp(beta U(sigma))), log-sum-exp stabilized."""
    field._guard()
    if beta == 0.0:
        return 0.0
    parts = []
    for _, vals in field.chunks():
        x = beta * vals
        m = float(x.max())
        parts.append((m, float(np.exp(x - m).sum())))
    top = max(m for m, _ in parts)
    total = sum(s * math.exp(m - top) for m, s in parts)
    # division by 2^n is exact, keeping beta -> 0 continuous with the exact zero
    return (top + math.log(total / float(field.size))) / field.n


def mean_energy(field: Landscape) -> float:
    field._guard()
    return sum(float(vals.sum()) for _, vals in field.chunks()) / field.size


def mean_flagged(field: Landscape, z: float = 5.0) -> bool:
    """True (with a warning) when the empirical mean leaves z * sqrt(n / 2^n)."""
    m = mean_energy(field)
    window = z * math.sqrt(field.n / field.size)
    if abs(m) > window:
        warnings.warn(f"landscape mean {m:.3g} outside +-{window:.3g} (seed {getattr(field, 'seed', '?')})",
                      stacklevel=2)
        return True
    return False


def min_energy(field: Landscape) -> MinEnergy:
    field._guard()
    best = math.inf
    arg = -1
    for start, vals in field.chunks():
        i = int(np.argmin(vals))
        if vals[i] < best:
            best = float(vals[i])
            arg = start + i
    n = field.n
    asym = -BETA_C * n + math.log(n * LN2) / (2.0 * BETA_C)
    return MinEnergy(best, arg, asym)
