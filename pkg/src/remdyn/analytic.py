"""Closed-form large-N quantities for the REM under simple-random-walk dynamics.

Everything here is a pure function of its scalar arguments.

Notation: ``beta_c = sqrt(2 ln 2)``; the limiting scaled cumulant generating
function is ``theta(t, lam, s) = max(exp(-s), p_rem(t*lam)/t) - 1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

BETA_C = math.sqrt(2.0 * math.log(2.0))
LN2 = math.log(2.0)
ARCOSH2 = math.acosh(2.0)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Constants:
    beta_c: float = BETA_C
    t_c: float = BETA_C * BETA_C / 2.0
    lambda_1: float = 1.0 / BETA_C
    lambda_2: float = 2.0 / BETA_C
    qrem_lambda_2: float = BETA_C / ARCOSH2
    qrem_T_c: float = ARCOSH2


CONSTANTS = Constants()


class _InfiniteRate:
    """Marker for an infinite rate function value.

    Deliberately supports no arithmetic; callers must branch on it.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITE_RATE"

    def __str__(self) -> str:
        return "inf"

    def __reduce__(self):
        return (_InfiniteRate, ())


INFINITE_RATE = _InfiniteRate()

Rate = Union[float, _InfiniteRate]


def is_infinite(value) -> bool:
    return value is INFINITE_RATE


class PhaseKind(enum.Enum):
    ACTIVE = "Active"
    INACTIVE_GLASS = "InactiveGlass"
    INACTIVE_PARAMAGNETIC = "InactiveParamagnetic"
    BOUNDARY = "Boundary"


class BoundaryKind(enum.Enum):
    ACTIVE_GLASS = "ActiveGlass"
    ACTIVE_PARA = "ActivePara"
    GLASS_PARA = "GlassPara"
    TRIPLE = "Triple"


@dataclass(frozen=True)
class PhaseLabel:
    kind: PhaseKind
    boundary_detail: Optional[BoundaryKind] = None

    def __post_init__(self):
        if (self.kind is PhaseKind.BOUNDARY) != (self.boundary_detail is not None):
            raise ValueError("boundary_detail must be set exactly for Boundary labels")

    def __str__(self) -> str:
        if self.boundary_detail is None:
            return self.kind.value
        return f"Boundary({self.boundary_detail.value})"


Activity = Union[float, tuple]


@dataclass(frozen=True)
class PhasePoint:
    t: float
    lam: float
    s: float
    theta: float
    activity: Activity
    label: PhaseLabel


class CriticalLine(NamedTuple):
    inv_t: float
    detail: BoundaryKind


def _check_t(t: float) -> None:
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")


def p_rem(beta: float) -> float:
    """Static REM pressure: beta^2/2 below beta_c, beta*beta_c - ln 2 above."""
    b = abs(beta)
    if b <= BETA_C:
        return 0.5 * b * b
    return b * BETA_C - LN2


def theta_limit(t: float, lam: float, s: float = 0.0) -> float:
    _check_t(t)
    return max(math.exp(-s), p_rem(t * lam) / t) - 1.0


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 500):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, max(f(x), f(lo), f(hi))


def legendre_numeric(t: float, u: float, s: float = 0.0, lam_max: Optional[float] = None) -> float:
    """sup over lam >= 0 of |u|*lam - theta(t, lam, s), by golden-section search.

    The objective is concave (theta is convex in lam), so a bracketing
    search on a finite interval finds its maximum. Returns the maximum on
    ``[0, lam_max]``; callers deal with |u| > beta_c (unbounded sup).
    """
    _check_t(t)
    a = abs(u)
    if lam_max is None:
        lam_max = max(10.0, 2.0 * a * BETA_C / min(t, 1.0), 2.0 * math.sqrt(2.0 / t))
    _, val = _golden_max(lambda lam: a * lam - theta_limit(t, lam, s), 0.0, lam_max)
    return val


def rate_function(t: float, u: float, s: float = 0.0) -> Rate:
    """Legendre-Fenchel transform of ``theta_limit`` in lam.

    At s = 0 the closed form is used:

    * |u| > beta_c: infinite;
    * t <= ln 2: |u| sqrt(2/t) for |u| <= sqrt(2t), else 1 + u^2/(2t);
    * t > ln 2: |u| (1/beta_c + beta_c/(2t)).

    The last line is where the active region ends on the frozen branch of
    ``p_rem`` (lam < 1/beta_c + beta_c/(2t)); the expression
    |u| sqrt(2/t) would undershoot the supremum there.
    """
    _check_t(t)
    a = abs(u)
    if a > BETA_C:
        return INFINITE_RATE
    if s != 0.0:
        return legendre_numeric(t, a, s)
    if t <= LN2:
        if a <= math.sqrt(2.0 * t):
            return a * math.sqrt(2.0 / t)
        return 1.0 + a * a / (2.0 * t)
    return a * (1.0 / BETA_C + BETA_C / (2.0 * t))


def rate_function_tabulated(t: float, u: float) -> Rate:
    """The three-case formula |u| sqrt(2/t) / 1 + u^2/(2t) / inf, verbatim.

    Agrees with ``rate_function(t, u, 0)`` for t <= ln 2 only; kept for
    comparison tables.
    """
    _check_t(t)
    a = abs(u)
    if a > BETA_C:
        return INFINITE_RATE
    if a <= min(math.sqrt(2.0 * t), BETA_C):
        return a * math.sqrt(2.0 / t)
    return 1.0 + a * a / (2.0 * t)


def classify_phase(t: float, lam: float, tol: float = DEFAULT_TOL) -> PhasePoint:
    _check_t(t)
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam!r}")
    beta = t * lam
    ratio = p_rem(beta) / t
    theta = max(1.0, ratio) - 1.0
    if ratio < 1.0 - tol:
        label = PhaseLabel(PhaseKind.ACTIVE)
        activity: Activity = 1.0
    elif ratio > 1.0 + tol:
        activity = 0.0
        if beta > BETA_C * (1.0 + tol):
            label = PhaseLabel(PhaseKind.INACTIVE_GLASS)
        elif beta < BETA_C * (1.0 - tol):
            label = PhaseLabel(PhaseKind.INACTIVE_PARAMAGNETIC)
        else:
            label = PhaseLabel(PhaseKind.BOUNDARY, BoundaryKind.GLASS_PARA)
    else:
        activity = (0.0, 1.0)
        if beta > BETA_C * (1.0 + tol):
            detail = BoundaryKind.ACTIVE_GLASS
        elif beta < BETA_C * (1.0 - tol):
            detail = BoundaryKind.ACTIVE_PARA
        else:
            detail = BoundaryKind.TRIPLE
        label = PhaseLabel(PhaseKind.BOUNDARY, detail)
    return PhasePoint(t=t, lam=lam, s=0.0, theta=theta, activity=activity, label=label)


def boundary_curves(lam: float) -> list[CriticalLine]:
    """Critical inverse times 1/t at fixed lam, ascending.

    lam <= 1/beta_c: active at every finite t, empty list.
    1/beta_c < lam < 2/beta_c: active/glass at 1/t = 2 lam/beta_c - 2/beta_c^2.
    lam = 2/beta_c: the triple point 1/t = 1/ln 2.
    lam > 2/beta_c: glass/para at 1/t = lam/beta_c, para/active at lam^2/2.
    """
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam!r}")
    c = CONSTANTS
    if lam <= c.lambda_1:
        return []
    if math.isclose(lam, c.lambda_2, rel_tol=DEFAULT_TOL, abs_tol=0.0):
        return [CriticalLine(1.0 / LN2, BoundaryKind.TRIPLE)]
    if lam < c.lambda_2:
        return [CriticalLine(2.0 * lam / BETA_C - 2.0 / (BETA_C * BETA_C), BoundaryKind.ACTIVE_GLASS)]
    return [
        CriticalLine(lam / BETA_C, BoundaryKind.GLASS_PARA),
        CriticalLine(0.5 * lam * lam, BoundaryKind.ACTIVE_PARA),
    ]


def activity_limit(t: float, lam: float, tol: float = DEFAULT_TOL) -> Activity:
    return classify_phase(t, lam, tol).activity


def _log_cosh(x: float) -> float:
    a = abs(x)
    return a + math.log1p(math.exp(-2.0 * a)) - LN2


def qrem_pressure(beta: float, lam: float, s: float = 0.0) -> float:
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta!r}")
    return max(_log_cosh(beta * math.exp(-s)), p_rem(beta * lam))
