"""Canonical domains, their exact spectral and exit-time values, and geometry queries.

Brownian motion here has generator (1/2) Laplacian, so E_x[tau] solves
(1/2) Lap u = -1 and P_x(tau > t) decays like exp(-lambda_1 t / 2).
"""

from __future__ import annotations

import math
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, NotAvailableError
from .numerics import first_bessel_zero, integrate

PI2 = math.pi ** 2
SERIES_TOL = 1e-14
SERIES_CAP = 200


# ---------------------------------------------------------------------------
# domain specifications
# ---------------------------------------------------------------------------

def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite length, got {value!r}")


class _Domain:
    """Behaviour shared by every domain spec."""

    dim: int

    @property
    def center(self) -> np.ndarray:
        return np.zeros(self.dim)

    def halfspaces(self):
        """(normals, offsets) with unit outward normals, or None for curved domains."""
        return None

    def signed_distance(self, x) -> float:
        normals, offsets = self.halfspaces()
        x = np.asarray(x, dtype=float)
        return float(np.max(normals @ x - offsets))

    def contains(self, x, closed: bool = True) -> bool:
        s = self.signed_distance(x)
        return s <= 0 if closed else s < 0

    def scaled(self, c: float):
        raise NotImplementedError

    @property
    def bounded(self) -> bool:
        return True


@dataclass(frozen=True)
class Ball(_Domain):
    d: int
    radius: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError("ball dimension must be a positive integer")
        _positive("radius", self.radius)

    @property
    def dim(self):
        return self.d

    @property
    def inradius(self):
        return self.radius

    def signed_distance(self, x):
        return float(np.linalg.norm(np.asarray(x, dtype=float)) - self.radius)

    def scaled(self, c):
        return Ball(self.d, self.radius * c)

    def bounding_box(self):
        return -self.radius * np.ones(self.d), self.radius * np.ones(self.d)


@dataclass(frozen=True)
class Box(_Domain):
    """Axis-aligned box prod_k (-a_k, a_k)."""
    half_widths: tuple

    def __post_init__(self):
        hw = tuple(float(a) for a in self.half_widths)
        if not hw:
            raise DomainError("box needs at least one half-width")
        for a in hw:
            _positive("half-width", a)
        object.__setattr__(self, "half_widths", hw)

    @property
    def dim(self):
        return len(self.half_widths)

    @property
    def inradius(self):
        return min(self.half_widths)

    def halfspaces(self):
        eye = np.eye(self.dim)
        a = np.asarray(self.half_widths)
        return np.vstack([eye, -eye]), np.concatenate([a, a])

    def scaled(self, c):
        return Box(tuple(a * c for a in self.half_widths))

    def bounding_box(self):
        a = np.asarray(self.half_widths)
        return -a, a


@dataclass(frozen=True)
class Slab(_Domain):
    """R^(d-1) x (-w, w); only the last coordinate matters for exit."""
    d: int
    half_width: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError("slab dimension must be a positive integer")
        _positive("half-width", self.half_width)

    @property
    def dim(self):
        return self.d

    @property
    def inradius(self):
        return self.half_width

    @property
    def bounded(self):
        return False

    def halfspaces(self):
        n = np.zeros((2, self.d))
        n[0, -1], n[1, -1] = 1.0, -1.0
        return n, np.array([self.half_width, self.half_width])

    def scaled(self, c):
        return Slab(self.d, self.half_width * c)

    def bounding_box(self):
        raise DomainError("slab is unbounded")


@dataclass(frozen=True)
class EquilateralTriangle(_Domain):
    """Equilateral triangle with incentre at the origin and a horizontal bottom side."""
    inradius: float = 1.0

    def __post_init__(self):
        _positive("inradius", self.inradius)

    dim = 2

    def halfspaces(self):
        s3 = math.sqrt(3.0) / 2.0
        normals = np.array([[0.0, -1.0], [s3, 0.5], [-s3, 0.5]])
        return normals, np.full(3, self.inradius)

    @property
    def vertices(self):
        r = self.inradius
        return np.array([[0.0, 2 * r], [-math.sqrt(3.0) * r, -r], [math.sqrt(3.0) * r, -r]])

    def scaled(self, c):
        return EquilateralTriangle(self.inradius * c)

    def bounding_box(self):
        v = self.vertices
        return v.min(axis=0), v.max(axis=0)


@dataclass(frozen=True)
class Ellipse(_Domain):
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        _positive("a", self.a)
        _positive("b", self.b)

    dim = 2

    @property
    def inradius(self):
        return min(self.a, self.b)

    def signed_distance(self, x):
        """First-order distance proxy (F - 1)/|grad F| with F = x^2/a^2 + y^2/b^2.

        The sign is exact; the magnitude is exact on the axes and for circles.
        """
        x0, y0 = float(x[0]), float(x[1])
        F = (x0 / self.a) ** 2 + (y0 / self.b) ** 2
        g = 2.0 * math.hypot(x0 / self.a ** 2, y0 / self.b ** 2)
        if g == 0.0:
            return -min(self.a, self.b)
        return max((F - 1.0) / g, -min(self.a, self.b)) if F < 1 else (F - 1.0) / g

    def scaled(self, c):
        return Ellipse(self.a * c, self.b * c)

    def bounding_box(self):
        return np.array([-self.a, -self.b]), np.array([self.a, self.b])


def _halfspaces_from_polygon(vertices):
    v = np.asarray(vertices, dtype=float)
    area2 = (v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1])
    if area2 < 0:
        v = v[::-1]
    normals, offsets = [], []
    for i in range(len(v)):
        p, q = v[i], v[(i + 1) % len(v)]
        e = q - p
        n = np.array([e[1], -e[0]]) / np.hypot(*e)
        normals.append(n)
        offsets.append(n @ p)
    return np.array(normals), np.array(offsets)


@dataclass(frozen=True)
class Triangle2D(_Domain):
    vertices: tuple

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.shape != (3, 2):
            raise DomainError("triangle needs three 2-D vertices")
        area2 = (v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1])
        if abs(area2) <= 1e-14 * max(1.0, float(np.abs(v).max()) ** 2):
            raise DomainError("triangle vertices are collinear")
        object.__setattr__(self, "vertices", tuple(tuple(map(float, p)) for p in v))

    dim = 2

    @property
    def _v(self):
        return np.asarray(self.vertices)

    @property
    def area(self):
        v = self._v
        return 0.5 * abs((v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1])
                         - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1]))

    @property
    def side_lengths(self):
        v = self._v
        return np.array([np.linalg.norm(v[(i + 1) % 3] - v[(i + 2) % 3]) for i in range(3)])

    @property
    def inradius(self):
        return 2.0 * self.area / self.side_lengths.sum()

    @property
    def center(self):
        # incentre: side-length weighted vertices (side i is opposite vertex i)
        w = self.side_lengths
        return (w[:, None] * self._v).sum(axis=0) / w.sum()

    def halfspaces(self):
        return _halfspaces_from_polygon(self._v)

    def scaled(self, c):
        return Triangle2D(tuple(tuple(c * np.asarray(p)) for p in self.vertices))

    def bounding_box(self):
        return self._v.min(axis=0), self._v.max(axis=0)


@dataclass(frozen=True)
class Polytope(_Domain):
    """Bounded convex polytope {x : n_i . x <= c_i}."""
    normals: tuple
    offsets: tuple
    _chebyshev: tuple = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        from scipy.optimize import linprog

        n = np.atleast_2d(np.asarray(self.normals, dtype=float))
        c = np.asarray(self.offsets, dtype=float).ravel()
        if n.shape[0] != c.shape[0] or n.shape[0] < n.shape[1] + 1:
            raise DomainError("polytope needs at least d+1 faces with one offset each")
        norms = np.linalg.norm(n, axis=1)
        if np.any(norms == 0):
            raise DomainError("polytope face normal is zero")
        n, c = n / norms[:, None], c / norms
        d = n.shape[1]
        for k in range(d):
            for sign in (1.0, -1.0):
                obj = np.zeros(d)
                obj[k] = -sign
                res = linprog(obj, A_ub=n, b_ub=c, bounds=[(None, None)] * d, method="highs")
                if res.status == 3:
                    raise DomainError(f"polytope is unbounded along coordinate {k}")
                if res.status != 0:
                    raise DomainError("polytope is empty")
        # Chebyshev centre: maximise r subject to n_i . x + r <= c_i
        obj = np.zeros(d + 1)
        obj[-1] = -1.0
        res = linprog(obj, A_ub=np.hstack([n, np.ones((len(c), 1))]), b_ub=c,
                      bounds=[(None, None)] * d + [(0, None)], method="highs")
        if res.status != 0 or res.x[-1] <= 0:
            raise DomainError("polytope has empty interior")
        object.__setattr__(self, "normals", tuple(map(tuple, n)))
        object.__setattr__(self, "offsets", tuple(c))
        object.__setattr__(self, "_chebyshev", (tuple(res.x[:-1]), float(res.x[-1])))

    @property
    def dim(self):
        return len(self.normals[0])

    @property
    def center(self):
        return np.asarray(self._chebyshev[0])

    @property
    def inradius(self):
        return self._chebyshev[1]

    def halfspaces(self):
        return np.asarray(self.normals), np.asarray(self.offsets)

    def scaled(self, c):
        return Polytope(self.normals, tuple(c * o for o in self.offsets))

    def bounding_box(self):
        from scipy.optimize import linprog

        n, c = self.halfspaces()
        lo, hi = [], []
        for k in range(self.dim):
            obj = np.zeros(self.dim)
            obj[k] = 1.0
            lo.append(linprog(obj, A_ub=n, b_ub=c, bounds=[(None, None)] * self.dim).fun)
            hi.append(-linprog(-obj, A_ub=n, b_ub=c, bounds=[(None, None)] * self.dim).fun)
        return np.array(lo), np.array(hi)


DomainSpec = Union[Ball, Box, Slab, EquilateralTriangle, Ellipse, Triangle2D, Polytope]


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

SPEC_GRAMMAR = """\
domain spec grammar:
  ball d=<int> r=<len>           e.g. "ball d=2 r=1"
  box <a1> <a2> ... <ad>         half-widths, e.g. "box 1 1"
  slab d=<int> w=<len>           R^(d-1) x (-w, w)
  triangle-eq r=<len>            equilateral triangle with inradius r
  ellipse a=<len> b=<len>        semi-axes
  triangle x1,y1 x2,y2 x3,y3     arbitrary triangle
  polytope file=<path>           one "n1 ... nd c" row per face n.x <= c"""


def _kv(tokens, allowed):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise DomainError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        if k not in allowed:
            raise DomainError(f"unknown key {k!r}")
        out[k] = v
    return out


def read_halfspace_file(path) -> Polytope:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(t) for t in line.split()])
    if not rows:
        raise DomainError(f"{path}: no half-space rows")
    arr = np.asarray(rows)
    return Polytope(tuple(map(tuple, arr[:, :-1])), tuple(arr[:, -1]))


def parse_spec(text: str) -> DomainSpec:
    tokens = shlex.split(text)
    if not tokens:
        raise DomainError("empty domain spec\n" + SPEC_GRAMMAR)
    kind, rest = tokens[0].lower(), tokens[1:]
    try:
        if kind == "ball":
            kv = _kv(rest, {"d", "r"})
            return Ball(int(kv.get("d", 2)), float(kv.get("r", 1.0)))
        if kind == "box":
            return Box(tuple(float(t) for t in rest))
        if kind == "slab":
            kv = _kv(rest, {"d", "w"})
            return Slab(int(kv.get("d", 2)), float(kv.get("w", 1.0)))
        if kind in ("triangle-eq", "equilateral"):
            kv = _kv(rest, {"r"})
            return EquilateralTriangle(float(kv.get("r", 1.0)))
        if kind == "ellipse":
            kv = _kv(rest, {"a", "b"})
            return Ellipse(float(kv.get("a", 1.0)), float(kv.get("b", 1.0)))
        if kind == "triangle":
            pts = tuple(tuple(float(c) for c in tok.split(",")) for tok in rest)
            return Triangle2D(pts)
        if kind == "polytope":
            kv = _kv(rest, {"file"})
            if "file" not in kv:
                raise DomainError("polytope needs file=<path>")
            return read_halfspace_file(kv["file"])
    except (ValueError, TypeError) as exc:
        raise DomainError(f"cannot parse domain spec {text!r}: {exc}\n{SPEC_GRAMMAR}") from exc
    raise DomainError(f"unknown domain kind {kind!r}\n{SPEC_GRAMMAR}")


def format_spec(spec: DomainSpec) -> str:
    g = lambda v: format(v, ".17g")
    if isinstance(spec, Ball):
        return f"ball d={spec.d} r={g(spec.radius)}"
    if isinstance(spec, Box):
        return "box " + " ".join(g(a) for a in spec.half_widths)
    if isinstance(spec, Slab):
        return f"slab d={spec.d} w={g(spec.half_width)}"
    if isinstance(spec, EquilateralTriangle):
        return f"triangle-eq r={g(spec.inradius)}"
    if isinstance(spec, Ellipse):
        return f"ellipse a={g(spec.a)} b={g(spec.b)}"
    if isinstance(spec, Triangle2D):
        return "triangle " + " ".join(f"{g(x)},{g(y)}" for x, y in spec.vertices)
    if isinstance(spec, Polytope):
        return f"polytope faces={len(spec.offsets)} d={spec.dim}"
    raise DomainError(f"unknown spec type {type(spec).__name__}")


# ---------------------------------------------------------------------------
# exact values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactValue:
    value: float
    kind: str = "exact-closed-form"  # or "series-truncated", "interval"
    interval: Optional[tuple] = None
    series_terms: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("exact-closed-form", "series-truncated", "interval"):
            raise DomainError(f"unknown ExactValue kind {self.kind!r}")
        if self.kind == "interval":
            lo, hi = self.interval
            if lo > hi:
                raise DomainError("interval with lo > hi")


def lambda1_exact(spec: DomainSpec) -> ExactValue:
    """Principal Dirichlet eigenvalue of -Laplacian where a closed form is known."""
    if isinstance(spec, Box):
        return ExactValue(PI2 / 4.0 * sum(1.0 / a ** 2 for a in spec.half_widths))
    if isinstance(spec, Slab):
        return ExactValue(PI2 / (4.0 * spec.half_width ** 2))
    if isinstance(spec, EquilateralTriangle):
        return ExactValue(4.0 * PI2 / (9.0 * spec.inradius ** 2))
    if isinstance(spec, Ball):
        if spec.d == 2:
            return ExactValue(first_bessel_zero() ** 2 / spec.radius ** 2)
        if spec.d == 1:
            return ExactValue(PI2 / (4.0 * spec.radius ** 2))
        raise NotAvailableError(
            f"lambda_1 of the {spec.d}-ball needs Bessel zeros of order d/2-1; "
            "use simulate.fd_lambda1 (d=2) or Monte Carlo plus the bounds")
    if isinstance(spec, Ellipse):
        k = (spec.a ** 2 + spec.b ** 2) / (spec.a ** 2 * spec.b ** 2)
        lo, hi = PI2 / 4.0 * k, first_bessel_zero() ** 2 / 2.0 * k
        # a circle sits at the top of the bracket; keep the bracket so callers see one kind
        return ExactValue(hi if spec.a == spec.b else 0.5 * (lo + hi), "interval", (lo, hi))
    raise NotAvailableError(
        f"no closed-form lambda_1 for {type(spec).__name__}; use simulate.fd_lambda1")


def _as_point(spec, x):
    x = spec.center if x is None else np.asarray(x, dtype=float).ravel()
    if x.shape != (spec.dim,):
        raise DomainError(f"point has dimension {x.shape[0]}, domain has {spec.dim}")
    if spec.signed_distance(x) > 1e-12 * max(1.0, spec.inradius):
        raise DomainError(f"point {x.tolist()} lies outside the domain")
    return x


def _on_boundary(spec, x):
    return spec.signed_distance(x) >= -1e-15 * max(1.0, spec.inradius)


def survival_interval(t, x=0.0):
    """P_x(tau_(-1,1) > t) for one-dimensional Brownian motion started at x.

    Eigenfunction series for t >= 0.05, Gaussian images below. Accepts arrays.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    t, x = np.broadcast_arrays(t, x)
    out = np.empty(t.shape)
    if np.any(t < 0):
        raise DomainError("survival time must be >= 0")
    inside = np.abs(x) < 1.0
    out[~inside] = 0.0

    small = inside & (t < 0.05)
    big = inside & ~small
    if np.any(small):
        ts, xs = t[small], x[small]
        res = np.ones(ts.shape)
        pos = ts > 0
        if np.any(pos):
            from scipy.special import ndtr
            tp, xp = ts[pos], xs[pos]
            s = np.sqrt(tp)
            acc = np.zeros(tp.shape)
            for k in range(-3, 4):
                # killed density = sum_k g(y - x - 4k) - g(y + x - 2 - 4k) on (-1, 1)
                c1 = xp + 4 * k
                c2 = 2 - xp + 4 * k
                acc += (ndtr((1 - c1) / s) - ndtr((-1 - c1) / s)) \
                    - (ndtr((1 - c2) / s) - ndtr((-1 - c2) / s))
            res[pos] = acc
        out[small] = res
    if np.any(big):
        tb, xb = t[big], x[big]
        acc = np.zeros(tb.shape)
        tmin = tb.min()
        for n in range(SERIES_CAP):
            m = 2 * n + 1
            decay = np.exp(-m * m * PI2 * tb / 8.0)
            term = (4.0 / math.pi) * (-1) ** n / m * np.cos(m * math.pi * xb / 2.0) * decay
            acc += term
            if 4.0 / math.pi / (m + 2) * math.exp(-(m + 2) ** 2 * PI2 * tmin / 8.0) < SERIES_TOL:
                break
        out[big] = acc
    return np.clip(out, 0.0, 1.0) if out.ndim else float(np.clip(out, 0.0, 1.0))


def _box_rect_mean_exit(A, B, x, y):
    """E_(x,y)[tau] on (-A, A) x (-B, B) with A <= B, series along the short side."""
    total = A * A - x * x
    corr = 0.0
    terms = 0
    for n in range(SERIES_CAP):
        m = 2 * n + 1
        k = m * math.pi / (2.0 * A)
        # cosh(k y)/cosh(k B) without overflow
        ratio = math.exp(k * (abs(y) - B)) * (1 + math.exp(-2 * k * abs(y))) / (1 + math.exp(-2 * k * B))
        term = (-1) ** n / m ** 3 * math.cos(k * x) * ratio
        corr += term
        terms = n + 1
        if abs(ratio) / m ** 3 < SERIES_TOL and n > 0:
            break
    return total - 32.0 * A * A / math.pi ** 3 * corr, terms


def square_center_series(n_terms: Optional[int] = None):
    """1 - (32/pi^3) sum (-1)^n (2n+1)^-3 sech((n + 1/2) pi): E_0[tau] for the unit square."""
    return rectangle_series_display(1.0, n_terms)[1]


def rectangle_series_display(a: float, n_terms: Optional[int] = None):
    """The sech-series form for the rectangle with half-widths (1, 1/a).

    Returns (lhs, bracket) where bracket = 1 - (32/pi^3) sum (-1)^n (2n+1)^-3 sech((n+1/2) pi/a)
    and lhs = (1 + a^2) * bracket, which equals G/(pi^2/4) for that rectangle.
    """
    cap = n_terms if n_terms is not None else 100_000
    s = 0.0
    for n in range(cap):
        m = 2 * n + 1
        arg = (n + 0.5) * math.pi / a
        sech = 2.0 * math.exp(-arg) / (1.0 + math.exp(-2.0 * arg))
        term = (-1) ** n / m ** 3 * sech
        s += term
        if n_terms is None and abs(term) < SERIES_TOL * 1e-2:
            break
    bracket = 1.0 - 32.0 / math.pi ** 3 * s
    return (1.0 + a * a) * bracket, bracket


def _box_moment(half_widths, x, p, tol=1e-12):
    """E_x[tau^p] for a box from the product of interval survival functions."""
    a = np.asarray(half_widths, dtype=float)
    xs = np.asarray(x, dtype=float) / a

    def surv(t):
        return float(np.prod(survival_interval(t / a ** 2, xs)))

    if p == 1:
        f = surv
    elif p < 1:
        # E[tau^p] = int_0^inf P(tau > s^(1/p)) ds avoids the t^(p-1) singularity
        f = lambda s: surv(s ** (1.0 / p))
    else:
        f = lambda t: p * t ** (p - 1.0) * surv(t)
    res = integrate(f, 0.0, math.inf, tol=tol, rel_tol=1e-13)
    return res.value


def mean_exit(spec: DomainSpec, x=None) -> float:
    """E_x[tau_D] for Brownian motion started at x (default: the centre)."""
    x = _as_point(spec, x)
    if _on_boundary(spec, x):
        return 0.0
    if isinstance(spec, Ball):
        return (spec.radius ** 2 - float(x @ x)) / spec.d
    if isinstance(spec, Slab):
        return spec.half_width ** 2 - x[-1] ** 2
    if isinstance(spec, Ellipse):
        a2, b2 = spec.a ** 2, spec.b ** 2
        return (a2 * b2 - b2 * x[0] ** 2 - a2 * x[1] ** 2) / (a2 + b2)
    if isinstance(spec, EquilateralTriangle):
        n, c = spec.halfspaces()
        dist = c - n @ x
        return 2.0 / (3.0 * spec.inradius) * float(np.prod(dist))
    if isinstance(spec, Box):
        hw = spec.half_widths
        if spec.dim == 1:
            return hw[0] ** 2 - x[0] ** 2
        if spec.dim == 2:
            if hw[0] <= hw[1]:
                return _box_rect_mean_exit(hw[0], hw[1], x[0], x[1])[0]
            return _box_rect_mean_exit(hw[1], hw[0], x[1], x[0])[0]
        return _box_moment(hw, x, 1.0)
    raise NotAvailableError(
        f"no closed-form mean exit time for {type(spec).__name__}; "
        "use simulate.fd_torsion_hierarchy or Monte Carlo")


def ball_moment_polynomial(d: int, k: int, radius: float = 1.0):
    """Coefficients c_j with E_x[tau^k] = sum_j c_j |x|^(2j) on the d-ball.

    Solves -Lap u_k = u_(k-1) radially (u_0 = 1) using Lap r^(2j) = 2j(2j+d-2) r^(2j-2),
    then rescales by 2^k k!. Exact for integer k.
    """
    if k < 1:
        raise DomainError("k must be a positive integer")
    R2 = radius * radius
    u = np.array([1.0])  # u_0 in powers of r^2
    for _ in range(k):
        new = np.zeros(len(u) + 1)
        # a r^(2j) -> -a r^(2j+2) / ((2j+2)(2j+d)); then add a constant for u(R)=0
        for j, cj in enumerate(u):
            new[j + 1] = -cj / ((2 * j + 2) * (2 * j + d))
        new[0] = -sum(new[j] * R2 ** j for j in range(1, len(new)))
        u = new
    return u * (2.0 ** k) * math.factorial(k)


def moment_exit_center(spec: DomainSpec, p: float) -> float:
    """E_0[tau^p] from the centre where a closed form or 1-D quadrature is available."""
    if not p > 0:
        raise DomainError("p must be > 0")
    if isinstance(spec, Box):
        if p == 1:
            return mean_exit(spec)
        return _box_moment(spec.half_widths, np.zeros(spec.dim), p)
    if isinstance(spec, Slab):
        if p == 1:
            return mean_exit(spec)
        return _box_moment((spec.half_width,), np.zeros(1), p)
    if isinstance(spec, Ball) and float(p).is_integer():
        return float(ball_moment_polynomial(spec.d, int(p), spec.radius)[0])
    if p == 1 and isinstance(spec, (Ellipse, EquilateralTriangle)):
        return mean_exit(spec)
    raise NotAvailableError(
        f"E_0[tau^{p}] for {type(spec).__name__} has no closed form here; use Monte Carlo")


def shape_functional(spec: DomainSpec, p: float = 1.0) -> float:
    """lambda_1(D)^p * E_0[tau^p], the supremum being taken at the centre."""
    lam = lambda1_exact(spec)
    if lam.kind == "interval":
        raise NotAvailableError("lambda_1 is only known up to an interval for this domain")
    return lam.value ** p * moment_exit_center(spec, p)


def torsion_moment(spec: DomainSpec, x=None, p: float = 1.0) -> float:
    """u_p(x) = E_x[tau^p] / (2^p Gamma(p+1))."""
    x = _as_point(spec, x)
    norm = 2.0 ** p * math.gamma(p + 1.0)
    if _on_boundary(spec, x):
        return 0.0
    if p == 1:
        return mean_exit(spec, x) / norm
    if isinstance(spec, Box):
        return _box_moment(spec.half_widths, x, p) / norm
    if isinstance(spec, Ball) and float(p).is_integer():
        c = ball_moment_polynomial(spec.d, int(p), spec.radius)
        r2 = float(x @ x)
        return float(sum(cj * r2 ** j for j, cj in enumerate(c))) / norm
    if np.allclose(x, spec.center):
        return moment_exit_center(spec, p) / norm
    raise NotAvailableError(f"u_{p} at an off-centre point of {type(spec).__name__}")


def signed_distance(spec: DomainSpec, x) -> float:
    """Negative inside, zero on the boundary, positive outside.

    Exact for balls, boxes and slabs inside and on the boundary. For polygonal
    domains outside the domain it returns the largest face excess, an outer
    proxy that is enough for exit detection.
    """
    return spec.signed_distance(np.asarray(x, dtype=float))
