"""Universal bounds on G_{p,d}(D) = lambda_1(D)^p sup_x E_x[tau_D^p].

All quantities that grow or shrink exponentially in d (C_d, (1 + 1/sqrt(eps))^(d/2),
Gamma(d)/Gamma(d/2)) are carried as logarithms so that d up to 1e6 is safe.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .errors import DomainError, ConvergenceError
from .numerics import (
    find_root,
    integrate,
    log_upper_incomplete_gamma,
    minimize_1d,
    scaled_upper_incomplete_gamma,
)

log = logging.getLogger(__name__)

LOG2 = math.log(2.0)

#: c = (1/4) sqrt(5 (1 + log(2)/4)), the constant in the closed-form upper bound.
C_CONST = 0.25 * math.sqrt(5.0 * (1.0 + 0.25 * LOG2))

#: Point quoted for the d=2, p=1 objective and the value it attains.
C1_REFERENCE_POINT = (1.65659, 0.173247)
C1_REFERENCE_VALUE = 2.03785


def _check_d(d):
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")


def _check_p(p):
    if not p > 0 or math.isinf(p):
        raise DomainError(f"moment order must be finite and > 0, got {p!r}")


@dataclass(frozen=True)
class SurvivalBoundParams:
    d: int
    lambda1: float
    eps: float
    t: float

    def __post_init__(self):
        _check_d(self.d)
        if not self.lambda1 > 0:
            raise DomainError("lambda1 must be positive")
        if not 0 < self.eps <= 1:
            raise DomainError("eps must lie in (0, 1]")
        if not self.t >= 0:
            raise DomainError("t must be >= 0")


@dataclass(frozen=True)
class BoundReport:
    d: int
    p: float
    lower: float
    c1: float
    c1_a_star: float
    c1_eps_star: float
    upper_c1: float
    y_d_root: float
    corollary_bound: Optional[float]
    c_const: float
    y_d_closed: float
    kappa: float
    c2: float
    sharp_upper: float
    vogt: Optional[float]

    def as_dict(self):
        return asdict(self)


def lower_bound(p: float) -> float:
    """2^p Gamma(p + 1), the universal floor of G_{p,d}."""
    _check_p(p)
    return math.exp(p * LOG2 + math.lgamma(p + 1.0))


def log_Cd(d: int) -> float:
    """log C_d with C_d = e^(d/4) sqrt(2) / (8d)^(d/4) * sqrt(Gamma(d) / Gamma(d/2))."""
    _check_d(d)
    return (d / 4.0 + 0.5 * LOG2 - (d / 4.0) * math.log(8.0 * d)
            + 0.5 * (math.lgamma(d) - math.lgamma(d / 2.0)))


def _log_K(d, eps):
    # log[C_d (1 + 1/sqrt(eps))^(d/2)]
    return log_Cd(d) + 0.5 * d * math.log1p(1.0 / math.sqrt(eps))


def c1_objective(d: int, p: float, a: float, eps: float) -> float:
    """The two-variable function whose infimum over a > 0, 0 < eps < 1 is C_1(d, p)."""
    _check_d(d)
    _check_p(p)
    if not a >= 0 or not 0 < eps < 1:
        raise DomainError("need a >= 0 and 0 < eps < 1")
    first = math.exp(p * math.log(a) - p * LOG2 - math.lgamma(p + 1.0)) if a > 0 else 0.0
    log_second = (_log_K(d, eps) - math.lgamma(p) - p * math.log1p(-eps)
                  + log_upper_incomplete_gamma(p, (1.0 - eps) * a / 2.0))
    return first + math.exp(log_second)


def _a_star(d, eps):
    # stationary point in a, independent of p; clamped to the boundary a -> 0+
    return max(2.0 * _log_K(d, eps) / (1.0 - eps), 0.0)


def _reduced_c1(d, p, eps):
    """min over a of the C_1 objective at fixed eps, written without overflow."""
    L = _log_K(d, eps)
    scale = -p * math.log1p(-eps)
    if L <= 0:
        # optimum sits at a -> 0+, where Gamma(p, 0)/Gamma(p) = 1
        return math.exp(L + scale)
    head = math.exp(p * math.log(L) - math.lgamma(p + 1.0) + scale)
    tail = math.exp(p * math.log(L) - math.lgamma(p) + scale) * scaled_upper_incomplete_gamma(p, L)
    return head + tail


_EPS_GRID = np.geomspace(1e-8, 1.0 - 1e-8, 64)


def c1_constant(d: int, p: float) -> tuple[float, float, float]:
    """C_1(d, p) and its minimiser (a*, eps*).

    The a-direction is solved in closed form; eps is located on a 64-point
    log-spaced scan and then polished by golden-section search on the
    neighbouring bracket.
    """
    _check_d(d)
    _check_p(p)
    h = lambda e: _reduced_c1(d, p, e)
    values = [h(e) for e in _EPS_GRID]
    i = int(np.argmin(values))
    lo = _EPS_GRID[max(i - 1, 0)]
    hi = _EPS_GRID[min(i + 1, len(_EPS_GRID) - 1)]
    local_minima = [j for j in range(1, len(values) - 1)
                    if values[j] <= values[j - 1] and values[j] <= values[j + 1]]
    if len(local_minima) > 1:
        log.warning(
            "C1 objective has %d local minima on the eps grid for d=%s p=%s; "
            "refining around the global grid minimum", len(local_minima), d, p)
    try:
        eps_star, c1 = minimize_1d(h, float(lo), float(hi), tol=1e-12 * max(1.0, hi))
    except ConvergenceError as exc:
        raise ConvergenceError(f"C1 minimisation failed for d={d}, p={p}", exc.diagnostics) from exc
    if values[i] < c1:
        eps_star, c1 = float(_EPS_GRID[i]), values[i]
    return c1, _a_star(d, eps_star), eps_star


def upper_bound_c1(d: int, p: float) -> float:
    c1, _, _ = c1_constant(d, p)
    return lower_bound(p) * c1


def _F(d, y, A):
    return (-d / 4.0 + d * math.sqrt(y) / 4.0 + y * (1.0 + A)
            + 0.5 * d * y * math.log((1.0 + 1.0 / math.sqrt(y)) / 2.0))


def corollary_bound(d: int) -> tuple[float, float]:
    """(y_d, bound) for p = 1, with y_d the unique zero of F_d on (0, 1)."""
    _check_d(d)
    A = 0.5 * d * LOG2 + log_Cd(d)
    y_d = find_root(lambda y: _F(d, y, A), 1e-300, 1.0, tol=1e-15)
    return y_d, 0.5 * d / (y_d * (1.0 + math.sqrt(y_d)))


def y_d_closed(d: int) -> float:
    return 1.0 / (1.0 + 16.0 * C_CONST / (5.0 * math.sqrt(d))) ** 2


def c2_tail_integral(p: float, kappa: float) -> float:
    """int_1^inf u^(p-1) e^((1-u) kappa) du = e^kappa kappa^-p Gamma(p, kappa)."""
    return scaled_upper_incomplete_gamma(p, kappa)


def c2_tail_integral_quadrature(p: float, kappa: float, tol: float = 1e-12) -> float:
    r = integrate(lambda u: u ** (p - 1.0) * math.exp((1.0 - u) * kappa), 1.0, math.inf,
                  tol=tol)
    return r.value


@dataclass(frozen=True)
class SharpUpper:
    c: float
    y_d: float
    kappa: float
    c2: float
    bound: float


def sharp_upper_bound(d: int, p: float) -> SharpUpper:
    """Closed-form upper bound 2^p (d/8 + c sqrt(d) + 1 - 1/(1 - y_d))^p C_2(d, p)."""
    _check_d(d)
    _check_p(p)
    y = y_d_closed(d)
    base = d / 8.0 + C_CONST * math.sqrt(d) + 1.0
    kappa = (1.0 - y) * base - 1.0
    if not kappa > 0:
        raise ConvergenceError(f"kappa = {kappa} <= 0 for d={d}", {"d": d, "y_d": y})
    c2 = 1.0 + p * c2_tail_integral(p, kappa)
    bound = (2.0 * (base - 1.0 / (1.0 - y))) ** p * c2
    return SharpUpper(C_CONST, y, kappa, c2, bound)


def vogt_bound(d: int) -> float:
    _check_d(d)
    return d / 4.0 + 0.5 * math.sqrt(d) * math.sqrt(5.0 * (1.0 + 0.25 * LOG2)) + 2.0


def survival_upper(params: SurvivalBoundParams) -> float:
    """Upper bound on sup_x P_x(tau_D > t); may exceed 1 at small t and is not clamped."""
    d, eps = params.d, params.eps
    return math.exp(_log_K(d, eps) - (1.0 - eps) * params.lambda1 * params.t / 2.0)


def log_cd_inequality_sides(d):
    """(lhs, rhs) of the elementary estimate used by the closed-form bound; d may be an array."""
    d = np.asarray(d, dtype=float)
    y = 1.0 / (1.0 + 16.0 * C_CONST / (5.0 * np.sqrt(d))) ** 2
    lhs = (0.25 - d / 2.0) * LOG2 + (d / 2.0) * np.log1p(1.0 / np.sqrt(y)) + 1.0
    rhs = (1.0 - y) * (d / 8.0 + C_CONST * np.sqrt(d) + 1.0)
    return lhs, rhs


def check_log_cd_inequality(d: int) -> bool:
    _check_d(d)
    lhs, rhs = log_cd_inequality_sides(d)
    return bool(lhs <= rhs)


def bound_report(d: int, p: float) -> BoundReport:
    lower = lower_bound(p)
    c1, a_star, eps_star = c1_constant(d, p)
    y_root, cor = corollary_bound(d)
    sharp = sharp_upper_bound(d, p)
    return BoundReport(
        d=int(d), p=float(p), lower=lower,
        c1=c1, c1_a_star=a_star, c1_eps_star=eps_star, upper_c1=lower * c1,
        y_d_root=y_root, corollary_bound=cor if p == 1 else None,
        c_const=sharp.c, y_d_closed=sharp.y_d, kappa=sharp.kappa, c2=sharp.c2,
        sharp_upper=sharp.bound, vogt=vogt_bound(d) if p == 1 else None,
    )
