"""Reproduction sweeps: bound tables, conjecture sweeps and moment inequality checks.

Every sweep returns a list of :class:`SweepRow`. Conjectures (rectangles,
triangles, non-integer moments) only ever produce verdicts; proven
inequalities are marked ``asserted`` and :func:`assert_rows` turns a violated
one into :class:`~exitbounds.errors.InvariantViolation`.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from . import bounds
from .domains import (
    PI2,
    Ball,
    Box,
    DomainSpec,
    Ellipse,
    EquilateralTriangle,
    Slab,
    Triangle2D,
    format_spec,
    lambda1_exact,
    mean_exit,
    rectangle_series_display,
    shape_functional,
    square_center_series,
)
from .errors import DomainError, InvariantViolation, NotAvailableError
from .numerics import first_bessel_zero
from .simulate import (
    DEFAULT_SEED,
    MomentEstimate,
    estimate_moments,
    estimate_sup_moment,
    estimate_survival,
    fd_eigen,
    fd_sup_mean_exit,
)
from .simulate.montecarlo import interior_grid

log = logging.getLogger(__name__)

HOLDS, VIOLATED, INCONCLUSIVE = "holds", "violated", "inconclusive"

PAYNE = PI2 / 4.0
TRIANGLE_VALUE = 8.0 * PI2 / 27.0

RECTANGLE_GRID = (1.0, 1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
# angle pairs (degrees) at the first two vertices
TRIANGLE_ANGLES = (
    (60, 60), (45, 90), (30, 90), (85, 85), (80, 80), (70, 70),
    (55, 55), (50, 50), (40, 40), (30, 30), (50, 70), (40, 75),
)
ELLIPSE_GRID = ((1.0, 1.0), (1.5, 1.0), (2.0, 1.0), (3.0, 1.0), (5.0, 1.0))
SERIES_FORM_TOL = 1e-6


@dataclass(frozen=True)
class SweepRow:
    sweep: str
    parameters: dict
    exact_value: Optional[float]
    mc_value: Optional[MomentEstimate]
    bound_lo: Optional[float]
    bound_hi: Optional[float]
    verdict: str
    margin: float
    tolerance: float = 0.0
    asserted: bool = False
    fd_value: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        rec = {"sweep": self.sweep}
        rec.update({f"param_{k}": v for k, v in self.parameters.items()})
        mc = self.mc_value
        rec.update({
            "exact_value": self.exact_value,
            "fd_value": self.fd_value,
            "mc_mean": mc.mean if mc else None,
            "mc_std_error": mc.std_error if mc else None,
            "mc_n": mc.n_samples if mc else None,
            "bound_lo": self.bound_lo,
            "bound_hi": self.bound_hi,
            "verdict": self.verdict,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "asserted": self.asserted,
        })
        rec.update(self.extra)
        return rec


def verdict_for(margin: float, tolerance: float) -> str:
    """holds when margin >= -tolerance; a NaN margin (value unavailable) is inconclusive."""
    if math.isnan(margin):
        return INCONCLUSIVE
    return HOLDS if margin >= -tolerance else VIOLATED


def assert_rows(rows: Sequence[SweepRow]) -> None:
    bad = [r for r in rows if r.asserted and r.verdict == VIOLATED]
    if bad:
        desc = "; ".join(f"{r.sweep} {r.parameters} margin={r.margin:.3g}" for r in bad)
        raise InvariantViolation(f"{len(bad)} asserted inequalities violated: {desc}")


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _sorted(rows):
    return sorted(rows, key=lambda r: tuple(
        v if isinstance(v, (int, float)) else str(v) for v in r.parameters.values()))


# ---------------------------------------------------------------- bound tables

def bound_table(d_list: Sequence[int], p_list: Sequence[float]) -> list[dict]:
    """One bound report per (d, p), with each bound divided by d^p next to the limit 4^-p."""
    rows = []
    for d in sorted(d_list):
        for p in sorted(p_list):
            rep = bounds.bound_report(d, p).as_dict()
            dp = float(d) ** p
            rep["upper_c1_over_dp"] = rep["upper_c1"] / dp
            rep["sharp_upper_over_dp"] = rep["sharp_upper"] / dp
            rep["limit_over_dp"] = 4.0 ** -p
            rows.append(rep)
    return rows


def canonical_specs(d: int) -> list[DomainSpec]:
    """Unit-size canonical domains in dimension d whose lambda_1 is known exactly."""
    specs = [Box((1.0,) * d), Slab(d, 1.0)]
    if d == 2:
        specs += [Ball(2, 1.0), EquilateralTriangle(1.0), Box((1.0, 2.0))]
    return specs


# ---------------------------------------------------------------- rectangles

def rectangle_sweep(a_grid: Sequence[float] = RECTANGLE_GRID, p: float = 1.0) -> list[SweepRow]:
    """G_p of the rectangle with half-widths (1, a) against the square.

    For p = 1 the sech-series display and the survival-quadrature form of
    G/(pi^2/4) are both evaluated; if they differ by more than 1e-6 the
    identification between them is broken and InvariantViolation is raised.
    """
    g_square = shape_functional(Box((1.0, 1.0)), p)
    rows = []
    for a in a_grid:
        if not a >= 1:
            raise DomainError(f"rectangle aspect ratio must be >= 1, got {a}")
        g = shape_functional(Box((1.0, float(a))), p)
        extra = {}
        if p == 1:
            lhs, _ = rectangle_series_display(a)
            _, sq_bracket = rectangle_series_display(1.0)
            quad = g / PAYNE
            gap = abs(lhs - quad)
            if gap > SERIES_FORM_TOL:
                raise InvariantViolation(
                    f"rectangle a={a}: sech display {lhs!r} and G/(pi^2/4) {quad!r} differ by {gap:.3g}")
            extra = {"series_lhs": lhs, "series_rhs": 2.0 * sq_bracket, "quadrature_lhs": quad,
                     "form_gap": gap}
        margin = g_square - g
        tol = 1e-9 * g_square
        rows.append(SweepRow("rectangles", {"a": float(a), "p": float(p)}, g, None,
                             bounds.lower_bound(p) if p != 1 else PAYNE, g_square,
                             verdict_for(margin, tol), margin, tol, extra=extra))
    return _sorted(rows)


# ---------------------------------------------------------------- triangles

def triangle_from_angles(alpha: float, beta: float, inradius: float = 1.0) -> Triangle2D:
    """Triangle with angles alpha, beta (degrees) at its first two vertices, scaled to the inradius."""
    al, be = math.radians(alpha), math.radians(beta)
    if not (al > 0 and be > 0 and al + be < math.pi):
        raise DomainError(f"angles {alpha}, {beta} do not form a triangle")
    side = math.sin(be) / math.sin(al + be)
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [side * math.cos(al), side * math.sin(al)]])
    t = Triangle2D(tuple(map(tuple, verts)))
    s = inradius / t.inradius
    return Triangle2D(tuple(map(tuple, verts * s)))


def fd_shape_functional(spec: DomainSpec, h: float) -> tuple[float, float]:
    """(G_1 from finite differences, an error estimate from the two mesh levels)."""
    eig = fd_eigen(spec, h)
    sup = fd_sup_mean_exit(spec, h)
    err = abs(eig.value - eig.fine) / eig.value
    return eig.value * sup, err * eig.value * sup


def triangle_sweep(angles: Sequence = TRIANGLE_ANGLES, h_div: float = 24.0,
                   threads: Optional[int] = None) -> list[SweepRow]:
    """G_1(T) by finite differences against 8 pi^2/27 on a grid of triangles.

    Each triangle is scaled to inradius 1 and meshed with h = 1/h_div and h/2.
    The row holding the sweep maximum carries ``argmax=True``.
    """
    def one(ab):
        a, b = ab
        tri = triangle_from_angles(a, b)
        g, err = fd_shape_functional(tri, 1.0 / h_div)
        tol = max(1e-3 * TRIANGLE_VALUE, 3.0 * err)
        margin = TRIANGLE_VALUE - g
        return SweepRow("triangles", {"angle_a": float(a), "angle_b": float(b),
                                      "angle_c": float(180 - a - b)},
                        None, None, PAYNE, TRIANGLE_VALUE, verdict_for(margin, tol), margin, tol,
                        fd_value=g)

    rows = _map(one, list(angles), threads)
    best = max(range(len(rows)), key=lambda i: rows[i].fd_value)
    out = []
    for i, r in enumerate(rows):
        equi = abs(r.parameters["angle_a"] - 60) < 1e-9 and abs(r.parameters["angle_b"] - 60) < 1e-9
        out.append(SweepRow(r.sweep, r.parameters, r.exact_value, r.mc_value, r.bound_lo,
                            r.bound_hi, r.verdict, r.margin, r.tolerance, r.asserted, r.fd_value,
                            {"equilateral": equi, "argmax": i == best}))
    eq_rows = [r for r in out if r.extra["equilateral"]]
    if eq_rows and not eq_rows[0].extra["argmax"]:
        top = out[best]
        if top.fd_value - eq_rows[0].fd_value > top.tolerance:
            log.warning("triangle sweep maximum is not the equilateral triangle: %s gives %.8g",
                        top.parameters, top.fd_value)
    return _sorted(out)


# ---------------------------------------------------------------- ordering

def ordering_chain(n_terms: Optional[int] = None) -> list[SweepRow]:
    """j0^2/2 < (pi^2/2) * square series < 8 pi^2/27, each gap required to exceed 1e-3."""
    disc = first_bessel_zero() ** 2 / 2.0
    square = PI2 / 2.0 * square_center_series(n_terms)
    check = PI2 / 2.0 * square_center_series(2 * n_terms if n_terms else 400)
    stable = abs(check - square)
    rows = []
    for name, lo, hi in (("disc<square", disc, square), ("square<triangle", square, TRIANGLE_VALUE)):
        gap = hi - lo
        rows.append(SweepRow("ordering", {"pair": name}, hi, None, lo, hi,
                             HOLDS if gap > 1e-3 else VIOLATED, gap, 1e-3, asserted=True,
                             extra={"lower_value": lo, "upper_value": hi,
                                    "series_refinement_change": stable}))
    return rows


# ---------------------------------------------------------------- ellipses

def ellipse_check(ab_grid: Sequence = ELLIPSE_GRID, h_div: float = 30.0,
                  threads: Optional[int] = None) -> list[SweepRow]:
    """pi^2/4 <= lambda_1 E_0 <= j0^2/2 for ellipses, using the eigenvalue interval and FD.

    The interval endpoints times E_0 = a^2 b^2/(a^2 + b^2) reproduce the two
    constants exactly; the finite-difference lambda_1 (h = min(a, b)/h_div)
    must fall inside the interval.
    """
    j2 = first_bessel_zero() ** 2 / 2.0

    def one(ab):
        a, b = map(float, ab)
        if not (a > 0 and b > 0):
            raise DomainError("ellipse semi-axes must be positive")
        e = Ellipse(a, b)
        lam = lambda1_exact(e)
        lo, hi = lam.interval if lam.kind == "interval" else (lam.value, lam.value)
        if lam.kind != "interval":
            lo = PAYNE * (a * a + b * b) / (a * a * b * b)
        e0 = mean_exit(e)
        eig = fd_eigen(e, min(a, b) / h_div)
        g = eig.value * e0
        tol = PAYNE * 1e-4 + 3.0 * abs(eig.value - eig.fine) * e0
        margin = min(g - PAYNE, j2 - g)
        return SweepRow("ellipses", {"a": a, "b": b}, None, None, PAYNE, j2,
                        verdict_for(margin, tol), margin, tol, asserted=True, fd_value=g,
                        extra={"lambda_lo": lo, "lambda_hi": hi, "lambda_fd": eig.value,
                               "e0": e0, "lo_times_e0": lo * e0, "hi_times_e0": hi * e0})

    return _sorted(_map(one, list(ab_grid), threads))


# ---------------------------------------------------------------- moments

def sup_mean_exit(spec: DomainSpec, n: int = 100_000, seed: int = DEFAULT_SEED,
                  step: Optional[float] = None, threads: Optional[int] = None,
                  grid_resolution: int = 5) -> tuple[float, float]:
    """(sup_x E_x[tau], its standard error): exact at the centre when available, else MC grid search."""
    try:
        return mean_exit(spec), 0.0
    except NotAvailableError:
        est = estimate_sup_moment(spec, 1.0, grid_resolution, n, step, seed, threads)
        return est.best.mean, est.best.std_error


def moment_inequality_check(spec: DomainSpec, k_max: int = 3, p_grid: Sequence[float] = (1.5,),
                            n: int = 100_000, seed: int = DEFAULT_SEED,
                            step: Optional[float] = None,
                            threads: Optional[int] = None) -> list[SweepRow]:
    """E_0[tau^k] <= k! (sup E[tau])^k for k = 2..k_max (asserted).

    Non-integer p in p_grid are compared with Gamma(p+1) (sup E[tau])^p and only
    reported. All moments come from one shared sample of exit times at the centre.
    """
    if not spec.bounded:
        raise DomainError("domain must be bounded")
    if int(k_max) != k_max or k_max < 2:
        raise DomainError("k_max must be an integer >= 2")
    m, m_se = sup_mean_exit(spec, n, seed, step, threads)
    ks = [float(k) for k in range(2, int(k_max) + 1)]
    ps = ks + [float(p) for p in p_grid if not float(p).is_integer()]
    ests = estimate_moments(spec, None, ps, n, step, seed, threads)
    rows = []
    for p, est in zip(ps, ests):
        integer = p.is_integer()
        g = math.gamma(p + 1.0)
        bound = g * m ** p
        bound_se = g * p * m ** (p - 1.0) * m_se
        tol = 3.0 * math.hypot(est.std_error, bound_se)
        margin = bound - est.mean
        rows.append(SweepRow("moments", {"spec": format_spec(spec), "p": p}, None, est,
                             None, bound, verdict_for(margin, tol), margin, tol,
                             asserted=integer, extra={"sup_mean_exit": m}))
    return rows


# ---------------------------------------------------------------- symmetrization

def area(spec: DomainSpec) -> float:
    if spec.dim != 2:
        raise DomainError("area is defined here for planar domains only")
    if isinstance(spec, Ball):
        return math.pi * spec.radius ** 2
    if isinstance(spec, Ellipse):
        return math.pi * spec.a * spec.b
    if isinstance(spec, Box):
        return 4.0 * spec.half_widths[0] * spec.half_widths[1]
    if isinstance(spec, EquilateralTriangle):
        return 3.0 * math.sqrt(3.0) * spec.inradius ** 2
    if isinstance(spec, Triangle2D):
        return spec.area
    from scipy.spatial import HalfspaceIntersection, ConvexHull

    n, c = spec.halfspaces()
    hs = HalfspaceIntersection(np.column_stack([n, -c]), spec.center)
    return float(ConvexHull(hs.intersections).volume)


def disc_survival(t, radius: float = 1.0):
    """P_0(tau > t) for the disc: sum 2/(j_n J_1(j_n)) exp(-j_n^2 t/(2 r^2)).

    Terms are kept until the exponent passes 40; below t/r^2 = 1e-4 the exit
    probability is under exp(-5000) and 1 is returned.
    """
    scalar = np.ndim(t) == 0
    s = np.atleast_1d(np.asarray(t, dtype=float)) / radius ** 2
    out = np.ones_like(s)
    live = s >= 1e-4
    if live.any():
        n_terms = int(math.sqrt(80.0 / s[live].min()) / math.pi) + 5
        j = special.jn_zeros(0, n_terms)
        coef = 2.0 / (j * special.j1(j))
        out[live] = np.exp(-np.multiply.outer(s[live], j ** 2) / 2.0) @ coef
    return float(out[0]) if scalar else out


def symmetrization_check(spec: DomainSpec, t_grid: Sequence[float] = (0.5, 1.0, 2.0),
                         n: int = 20_000, seed: int = DEFAULT_SEED, grid_resolution: int = 3,
                         step: Optional[float] = None,
                         threads: Optional[int] = None) -> list[SweepRow]:
    """sup_x P_x(tau_D > t) <= P_0(tau_D* > t) with D* the disc of equal area (asserted).

    The left side is a Monte Carlo maximum over the centre and an interior grid
    (common random numbers); the right side is the Bessel series.
    """
    if spec.dim != 2 or not spec.bounded:
        raise DomainError("symmetrization check needs a bounded planar domain")
    r_star = math.sqrt(area(spec) / math.pi)
    ts = sorted(float(t) for t in t_grid)
    points = interior_grid(spec, grid_resolution)
    per_point = [estimate_survival(spec, pt, ts, n, step, seed, threads) for pt in points]
    rhs = disc_survival(ts, r_star)
    rows = []
    for k, t in enumerate(ts):
        best = max((pp[k] for pp in per_point), key=lambda e: e.prob)
        tol = 3.0 * best.std_error + 1e-12
        margin = float(rhs[k]) - best.prob
        rows.append(SweepRow("symmetrization", {"spec": format_spec(spec), "t": t},
                             float(rhs[k]), None, None, float(rhs[k]),
                             verdict_for(margin, tol), margin, tol, asserted=True,
                             extra={"mc_sup_survival": best.prob,
                                    "mc_sup_std_error": best.std_error,
                                    "equal_area_radius": r_star}))
    return rows


# ---------------------------------------------------------------- survival bound

def survival_bound_check(eps_grid: Sequence[float] = (0.2, 0.5, 0.9),
                         t_grid: Sequence[float] = (0.5, 1.0, 2.0, 4.0),
                         n: int = 100_000, seed: int = DEFAULT_SEED,
                         step: Optional[float] = None,
                         threads: Optional[int] = None) -> list[SweepRow]:
    """MC P_0(tau > t) on the square (-1, 1)^2 against the universal survival bound (asserted)."""
    sq = Box((1.0, 1.0))
    lam = PI2 / 2.0
    ests = estimate_survival(sq, None, t_grid, n, step, seed, threads)
    rows = []
    for eps in eps_grid:
        for est in ests:
            ub = bounds.survival_upper(bounds.SurvivalBoundParams(2, lam, eps, est.t))
            tol = 3.0 * est.std_error
            margin = ub - est.prob
            rows.append(SweepRow("survival", {"eps": float(eps), "t": est.t}, None, None, None, ub,
                                 verdict_for(margin, tol), margin, tol, asserted=True,
                                 extra={"mc_survival": est.prob, "mc_std_error": est.std_error}))
    return rows
