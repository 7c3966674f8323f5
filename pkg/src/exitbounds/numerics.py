"""Scalar numerical kernels: gamma functions, J0, root finding, minimization, quadrature.

Everything here is pure Python on floats. Callers pass plain callables; the
evaluation budget is the ``max_evals`` keyword of each solver.
"""

from __future__ import annotations

import heapq
import logging
import math
from functools import lru_cache
from typing import Callable, NamedTuple

from .errors import BracketError, ConvergenceError, DomainError

log = logging.getLogger(__name__)

RealFn = Callable[[float], float]

EPS = 2.220446049250313e-16
TINY = 1e-300


class QuadratureResult(NamedTuple):
    value: float
    abs_error: float
    evaluations: int
    converged: bool = True


# ---------------------------------------------------------------------------
# gamma family
# ---------------------------------------------------------------------------

def log_gamma(x: float) -> float:
    if not x > 0 or math.isinf(x):
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    return math.lgamma(x)


def _lower_gamma_series(s, x, max_iter=10_000):
    # sum_{n>=0} x^n / (s (s+1) ... (s+n)); gamma(s, x) = e^-x x^s * sum
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            return total
    raise ConvergenceError("incomplete gamma series did not converge", {"s": s, "x": x})


def _upper_gamma_cf(s, x, max_iter=10_000):
    """Modified Lentz evaluation of Gamma(s, x) * e^x * x^-s for x >= s + 1."""
    b = x + 1.0 - s
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ConvergenceError("incomplete gamma continued fraction did not converge", {"s": s, "x": x})


def _check_gamma_args(s, x):
    if not (s > 0 and math.isfinite(s)):
        raise DomainError(f"incomplete gamma requires s > 0, got s={s!r}")
    if not x >= 0 or math.isnan(x):
        raise DomainError(f"incomplete gamma requires x >= 0, got x={x!r}")


def log_upper_incomplete_gamma(s: float, x: float) -> float:
    """log Gamma(s, x), safe when Gamma(s, x) itself would underflow."""
    _check_gamma_args(s, x)
    if x == 0:
        return math.lgamma(s)
    if math.isinf(x):
        return -math.inf
    if x < s + 1.0:
        lower = math.exp(-x + s * math.log(x) - math.lgamma(s)) * _lower_gamma_series(s, x)
        return math.lgamma(s) + math.log1p(-lower)
    return -x + s * math.log(x) + math.log(_upper_gamma_cf(s, x))


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Gamma(s, x) = int_x^inf u^(s-1) e^-u du."""
    return math.exp(log_upper_incomplete_gamma(s, x))


def scaled_upper_incomplete_gamma(s: float, x: float) -> float:
    """e^x x^-s Gamma(s, x), finite for large x where both factors over/underflow.

    This equals int_1^inf u^(s-1) e^((1-u) x) du.
    """
    _check_gamma_args(s, x)
    if x == 0:
        raise DomainError("scaled incomplete gamma is undefined at x = 0")
    if x >= s + 1.0:
        return _upper_gamma_cf(s, x)
    return math.exp(x - s * math.log(x) + log_upper_incomplete_gamma(s, x))


# ---------------------------------------------------------------------------
# Bessel J0
# ---------------------------------------------------------------------------

def _j0_series(x):
    q = -0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if abs(term) < 1e-17 * max(1.0, abs(total)):
            return total


def _j0_miller(x):
    # backward recurrence J_{n-1} = (2n/x) J_n - J_{n+1}, normalised by J0 + 2 sum J_2k = 1
    n_start = 2 * ((int(x) + 40) // 2)
    j_next, j_cur = 0.0, 1e-30
    norm = 0.0
    j0 = 0.0
    for n in range(n_start, 0, -1):
        j_prev = (2.0 * n / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j_cur
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
        if n - 1 == 0:
            j0 = j_cur
    norm += j0
    return j0 / norm


def _j0_hankel(x):
    # b_m = prod_{j<=m} (2j-1)^2 / (m! 8^m x^m);  P = sum (-1)^k b_2k,  Q = -sum (-1)^k b_2k+1
    p_sum, q_sum = 1.0, 0.0
    b = 1.0
    m = 0
    while True:
        m += 1
        nxt = b * (2 * m - 1) ** 2 / (m * 8.0 * x)
        if nxt >= b or nxt < 1e-18:
            break
        b = nxt
        if m % 2 == 0:
            p_sum += b if (m // 2) % 2 == 0 else -b
        else:
            q_sum += -b if ((m - 1) // 2) % 2 == 0 else b
    chi = x - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * math.cos(chi) - q_sum * math.sin(chi))


def bessel_j0(x: float) -> float:
    """J0(x): power series for |x| <= 8, Miller recurrence up to 25, Hankel asymptotics beyond."""
    ax = abs(float(x))
    if ax <= 8.0:
        return _j0_series(ax)
    if ax < 25.0:
        return _j0_miller(ax)
    return _j0_hankel(ax)


@lru_cache(maxsize=None)
def first_bessel_zero() -> float:
    """First positive zero j0 of J0."""
    return find_root(bessel_j0, 2.0, 3.0, tol=1e-15)


# ---------------------------------------------------------------------------
# root finding and minimisation
# ---------------------------------------------------------------------------

def find_root(f: RealFn, lo: float, hi: float, tol: float = 1e-12, max_evals: int = 400) -> float:
    """Bracketed root of f on [lo, hi].

    Secant steps alternate with bisections so the bracket at least halves every
    two iterations; a probe just across each secant point lets the bracket
    collapse once the secant has landed within tol of the root.
    """
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise DomainError("tol must be positive")
    flo, fhi = f(lo), f(hi)
    evals = 2
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")

    bisect = False
    while hi - lo > tol:
        if evals >= max_evals:
            raise ConvergenceError(
                "find_root budget exhausted", {"lo": lo, "hi": hi, "evals": evals}
            )
        if bisect:
            x = 0.5 * (lo + hi)
        else:
            x = hi - fhi * (hi - lo) / (fhi - flo)
            if not lo < x < hi:
                x = 0.5 * (lo + hi)
        bisect = not bisect
        fx = f(x)
        evals += 1
        if fx == 0:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
            probe = min(x + 0.5 * tol, hi)
        else:
            hi, fhi = x, fx
            probe = max(x - 0.5 * tol, lo)
        if lo < probe < hi:
            fp = f(probe)
            evals += 1
            if fp == 0:
                return probe
            if (fp > 0) == (flo > 0):
                lo, flo = probe, fp
            else:
                hi, fhi = probe, fp
    return lo if abs(flo) <= abs(fhi) else hi


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def minimize_1d(f: RealFn, lo: float, hi: float, tol: float = 1e-10,
                max_evals: int = 500) -> tuple[float, float]:
    """Golden-section search; returns (argmin, min)."""
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise DomainError("tol must be positive")
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    fa, fb = f(a), f(b)
    evals += 2
    if max(fc, fd) > max(fa, fb):
        log.warning("minimize_1d: interior values exceed both ends on [%g, %g]; "
                    "objective may not be unimodal", lo, hi)
    while b - a > tol:
        if evals >= max_evals:
            raise ConvergenceError("minimize_1d budget exhausted",
                                   {"bracket": (a, b), "evals": evals})
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    best = min((fc, c), (fd, d), (fa, lo), (fb, hi))
    return best[1], best[0]


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

_XGK = (0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0)
_WGK = (0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714)
_WG = (0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
       0.381830050505118944950369775488975, 0.417959183673469387755102040816327)


def _gk15(f, a, b):
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fc = f(centre)
    kron = fc * _WGK[7]
    gauss = fc * _WG[3]
    for j in range(7):
        dx = half * _XGK[j]
        pair = f(centre - dx) + f(centre + dx)
        kron += _WGK[j] * pair
        if j % 2 == 1:
            gauss += _WG[j // 2] * pair
    return kron * half, abs((kron - gauss) * half)


def integrate(f: RealFn, a: float, b: float, tol: float = 1e-10, rel_tol: float = 0.0,
              max_evals: int = 100_000) -> QuadratureResult:
    """Adaptive 15-point Gauss-Kronrod on [a, b]; b may be +inf.

    A semi-infinite range is mapped to [0, 1) by t = a + s / (1 - s). The
    panel with the largest error estimate is bisected until the summed
    estimate is below max(tol, rel_tol * |value|). Running out of budget
    returns the best value with ``converged=False``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if math.isinf(a):
        raise DomainError("lower limit must be finite")
    if b == a:
        return QuadratureResult(0.0, 0.0, 0, True)
    if math.isinf(b):
        if b < 0:
            raise DomainError("upper limit -inf is not supported")
        g = f

        def f(s, _g=g, _a=a):
            w = 1.0 - s
            return _g(_a + s / w) / (w * w)

        a, b = 0.0, 1.0
    elif b < a:
        r = integrate(f, b, a, tol, rel_tol, max_evals)
        return r._replace(value=-r.value)

    value, err = _gk15(f, a, b)
    evals = 15
    heap = [(-err, a, b, value, err)]
    total, total_err = value, err
    while total_err > max(tol, rel_tol * abs(total)):
        if evals + 30 > max_evals:
            return QuadratureResult(total, total_err, evals, False)
        _, lo, hi, v, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        evals += 30
        heapq.heappush(heap, (-e1, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, mid, hi, v2, e2))
        # re-sum rather than update incrementally so rounding does not drift
        total = math.fsum(item[3] for item in heap)
        total_err = math.fsum(item[4] for item in heap)
    return QuadratureResult(total, total_err, evals, True)
