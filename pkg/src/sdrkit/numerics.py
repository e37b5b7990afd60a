"""Special functions and a finite-difference complete-monotonicity screen."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import mpmath
import numpy as np
from scipy import special

from .errors import DomainError, EvaluationError

# Above this argument the float series loses ~1e-11 to cancellation; sum in
# extended precision instead.
_FLOAT_SERIES_MAX_X = 8.0
# Above this argument the raw series is abandoned for the AMOS routine.
BESSEL_J_SWITCH_X = 30.0

DEFAULT_CM_STEP = 1e-2
DEFAULT_CM_TOL = 1e-6


def gamma_fn(a: float) -> float:
    """Gamma function for positive real arguments."""
    a = float(a)
    if not a > 0 or not math.isfinite(a):
        raise DomainError(f"gamma_fn requires a > 0, got {a}")
    return math.gamma(a)


def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def _bessel_j_series_float(alpha: float, x: float) -> float:
    half = 0.5 * x
    log_half = math.log(half)
    terms = []
    m = 0
    while True:
        order = m + alpha + 1.0
        if _is_nonpositive_integer(order):
            term = 0.0
        else:
            # alpha >= -1 keeps order > 0 here, so lgamma carries no sign
            log_mag = (2 * m + alpha) * log_half - math.lgamma(m + 1) - math.lgamma(order)
            term = (-1.0 if m % 2 else 1.0) * math.exp(log_mag)
        terms.append(term)
        if m > half and abs(term) < 1e-18 * max(abs(math.fsum(terms)), 1e-300):
            break
        m += 1
        if m > 500:
            break
    return math.fsum(terms)


def _bessel_j_series_mp(alpha: float, x: float) -> float:
    with mpmath.workdps(50):
        a = mpmath.mpf(alpha)
        half = mpmath.mpf(x) / 2
        total = mpmath.mpf(0)
        m = 0
        while True:
            term = (-1) ** m * mpmath.rgamma(m + a + 1) / mpmath.factorial(m) * half ** (2 * m + a)
            total += term
            if m > half and abs(term) < mpmath.mpf(10) ** -30 * max(abs(total), mpmath.mpf(10) ** -300):
                break
            m += 1
        return float(total)


def bessel_j_series(alpha: float, x: float) -> float:
    """Bessel J_alpha(x) summed directly from its power series.

    Small arguments are summed in double precision; larger ones in 50-digit
    arithmetic so that cancellation between terms does not eat the result.
    """
    alpha = float(alpha)
    x = float(x)
    if x < 0:
        raise DomainError(f"bessel_j requires x >= 0, got {x}")
    if alpha < -1:
        raise DomainError(f"bessel_j requires alpha >= -1, got {alpha}")
    if x == 0.0:
        if alpha == 0.0:
            return 1.0
        if alpha > 0 or _is_nonpositive_integer(alpha):
            return 0.0
        raise DomainError(f"J_{alpha}(0) is unbounded")
    if x <= _FLOAT_SERIES_MAX_X:
        return _bessel_j_series_float(alpha, x)
    return _bessel_j_series_mp(alpha, x)


def bessel_j(alpha: float, x: float) -> float:
    """Bessel function of the first kind J_alpha(x) for x >= 0, alpha >= -1.

    Uses the power series up to ``BESSEL_J_SWITCH_X`` and the AMOS routine
    (``scipy.special.jv``) beyond it.
    """
    alpha = float(alpha)
    x = float(x)
    if x < 0:
        raise DomainError(f"bessel_j requires x >= 0, got {x}")
    if alpha < -1:
        raise DomainError(f"bessel_j requires alpha >= -1, got {alpha}")
    if x > BESSEL_J_SWITCH_X:
        return float(special.jv(alpha, x))
    return bessel_j_series(alpha, x)


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind K_nu(x).

    Accepts a scalar or an array for ``x``; every entry must be positive.
    """
    nu = float(nu)
    if not nu > 0:
        raise DomainError(f"bessel_k requires nu > 0, got {nu}")
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("bessel_k requires x > 0 (K_nu diverges at 0)")
    out = special.kv(nu, arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScalarFn:
    """A real function on ``(lower, inf)`` (or ``[lower, inf)`` if closed)."""

    fn: Callable[[float], float]
    lower: float = 0.0
    open_lower: bool = True
    name: str = "f"

    def __call__(self, x: float) -> float:
        return self.fn(x)


@dataclass
class MonotonicityReport:
    max_order_checked: int
    grid: list[float]
    violations: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _eval_checked(f: Callable[[float], float], x: float) -> float:
    try:
        v = float(f(x))
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"evaluation failed at x={x}: {exc}", point=x) from exc
    if not math.isfinite(v):
        raise EvaluationError(f"non-finite value {v} at x={x}", point=x)
    return v


def check_complete_monotone(
    f: Union[ScalarFn, Callable[[float], float]],
    grid: Sequence[float],
    max_order: int = 6,
    step: float = DEFAULT_CM_STEP,
    tol: float = DEFAULT_CM_TOL,
) -> MonotonicityReport:
    """Screen ``f`` for complete monotonicity with forward differences.

    For every order ``r <= max_order`` and grid point ``x`` the forward
    difference ``D^r f(x)`` with spacing ``step`` is formed and a violation is
    recorded when ``(-1)^r D^r f(x) < -tol * max(1, |f(x)|)``. Passing is a
    necessary condition only.
    """
    if max_order < 1:
        raise DomainError("max_order must be >= 1")
    pts = [float(x) for x in grid]
    if not pts:
        raise DomainError("grid must be non-empty")
    lower = f.lower if isinstance(f, ScalarFn) else 0.0
    open_lower = f.open_lower if isinstance(f, ScalarFn) else True
    for x in pts:
        if x < lower or (open_lower and x == lower):
            raise DomainError(f"grid point {x} lies outside the domain of f")

    binom = [[math.comb(r, k) for k in range(r + 1)] for r in range(max_order + 1)]
    violations = []
    for x in pts:
        vals = [_eval_checked(f, x + k * step) for k in range(max_order + 1)]
        scale = max(1.0, abs(vals[0]))
        for r in range(max_order + 1):
            diff = math.fsum((-1) ** (r - k) * binom[r][k] * vals[k] for k in range(r + 1))
            signed = (-1) ** r * diff
            if signed < -tol * scale:
                violations.append((r, x, signed))
    return MonotonicityReport(max_order_checked=max_order, grid=pts, violations=violations)
