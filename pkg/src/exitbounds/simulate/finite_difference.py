"""Finite differences on a square grid for planar domains.

The Dirichlet Laplacian is discretised with the Shortley-Weller five-point
stencil: next to the boundary the arm of the stencil is shortened to the exact
distance at which the grid line leaves the domain. This keeps the scheme second
order on curved and slanted boundaries, where a staircase mask is only first
order and Richardson extrapolation would not help. The stencil is not
symmetric, so linear solves use a sparse LU factorisation.

Grids are anchored at the domain centre, so the nodes of spacing h are a subset
of those of spacing h/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..domains import Ball, DomainSpec, Ellipse
from ..errors import ConvergenceError, DomainError

MIN_NODES = 100


@dataclass(frozen=True)
class Grid2D:
    """Nodal values on the grid origin + h * (i, j).

    ``values[i, j]`` belongs to the point (origin[0] + i h, origin[1] + j h) and
    is zero wherever ``mask`` is False.
    """
    nx: int
    ny: int
    h: float
    origin: tuple
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError("h must be > 0")
        if self.values.shape != (self.nx, self.ny) or self.mask.shape != (self.nx, self.ny):
            raise DomainError("values and mask must have shape (nx, ny)")

    @property
    def xs(self):
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def ys(self):
        return self.origin[1] + self.h * np.arange(self.ny)

    def value_at(self, point) -> float:
        """Bilinear interpolation; exact at nodes."""
        fx = (float(point[0]) - self.origin[0]) / self.h
        fy = (float(point[1]) - self.origin[1]) / self.h
        i = min(max(int(math.floor(fx)), 0), self.nx - 2)
        j = min(max(int(math.floor(fy)), 0), self.ny - 2)
        tx, ty = fx - i, fy - j
        v = self.values
        return float((1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i + 1, j]
                     + (1 - tx) * ty * v[i, j + 1] + tx * ty * v[i + 1, j + 1])

    def peak(self) -> tuple[float, tuple]:
        """Maximum refined by a separable parabola through the best node and its neighbours."""
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        v = self.values
        best = float(v[i, j])
        x = [self.xs[i], self.ys[j]]
        if 0 < i < self.nx - 1 and 0 < j < self.ny - 1:
            for axis, (lo, hi) in enumerate([(v[i - 1, j], v[i + 1, j]), (v[i, j - 1], v[i, j + 1])]):
                curv = lo - 2.0 * best + hi
                if curv < 0:
                    shift = 0.5 * (lo - hi) / curv
                    best -= 0.125 * (hi - lo) ** 2 / curv
                    x[axis] += shift * self.h
        return best, tuple(x)


# ---------------------------------------------------------------- geometry

def _geometry(spec):
    """(level, ray) for a planar domain.

    level(X, Y) is negative inside. ray(X, Y, ex, ey) is the distance from
    interior points along the unit axis direction (ex, ey) to the boundary.
    """
    if spec.dim != 2 or not spec.bounded:
        raise DomainError("finite differences need a bounded planar domain")
    if isinstance(spec, Ball):
        r = spec.radius

        def level(X, Y):
            return np.hypot(X, Y) - r

        def ray(X, Y, ex, ey):
            b = X * ex + Y * ey
            return -b + np.sqrt(np.maximum(b * b - (X * X + Y * Y) + r * r, 0.0))
        return level, ray
    if isinstance(spec, Ellipse):
        a2, b2 = spec.a ** 2, spec.b ** 2

        def level(X, Y):
            return X * X / a2 + Y * Y / b2 - 1.0

        def ray(X, Y, ex, ey):
            A = ex * ex / a2 + ey * ey / b2
            B = 2.0 * (X * ex / a2 + Y * ey / b2)
            C = X * X / a2 + Y * Y / b2 - 1.0
            return (-B + np.sqrt(np.maximum(B * B - 4.0 * A * C, 0.0))) / (2.0 * A)
        return level, ray
    hs = spec.halfspaces()
    if hs is None:
        raise DomainError(f"no finite-difference geometry for {type(spec).__name__}")
    normals, offsets = hs

    def level(X, Y):
        return np.max(normals[:, 0, None] * X.ravel() + normals[:, 1, None] * Y.ravel()
                      - offsets[:, None], axis=0).reshape(X.shape)

    def ray(X, Y, ex, ey):
        out = np.full(X.shape, np.inf)
        for (n0, n1), c in zip(normals, offsets):
            rate = n0 * ex + n1 * ey
            if rate > 0:
                out = np.minimum(out, (c - n0 * X - n1 * Y) / rate)
        return out
    return level, ray


@dataclass
class _Mesh:
    origin: tuple
    h: float
    mask: np.ndarray
    index: np.ndarray
    A: sp.csc_matrix

    @property
    def n(self):
        return self.A.shape[0]

    def grid(self, u):
        vals = np.zeros(self.mask.shape)
        vals[self.mask] = u
        return Grid2D(self.mask.shape[0], self.mask.shape[1], self.h, self.origin, vals,
                      self.mask.copy())


def _assemble(spec: DomainSpec, h: float) -> _Mesh:
    if not h > 0:
        raise DomainError("h must be > 0")
    level, ray = _geometry(spec)
    lo, hi = spec.bounding_box()
    c = spec.center
    ilo = np.floor((lo - c) / h).astype(int) - 1
    ihi = np.ceil((hi - c) / h).astype(int) + 1
    xs = c[0] + h * np.arange(ilo[0], ihi[0] + 1)
    ys = c[1] + h * np.arange(ilo[1], ihi[1] + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    # nodes within a hair of the boundary count as boundary nodes
    inside = level(X, Y) < -1e-9 * h
    n = int(inside.sum())
    if n < MIN_NODES:
        raise DomainError(f"h={h} leaves only {n} interior nodes; need {MIN_NODES}")
    index = -np.ones(X.shape, dtype=np.int64)
    index[inside] = np.arange(n)
    Xi, Yi = X[inside], Y[inside]
    I, J = np.nonzero(inside)

    arms = {}
    nbrs = {}
    for name, (di, dj) in {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}.items():
        nb = index[I + di, J + dj]
        arm = np.full(n, h)
        cut = nb < 0
        if cut.any():
            arm[cut] = np.minimum(h, ray(Xi[cut], Yi[cut], float(di), float(dj)))
        arms[name], nbrs[name] = arm, nb

    rows, cols, vals = [np.arange(n)], [np.arange(n)], []
    diag = np.zeros(n)
    for a_name, b_name in (("E", "W"), ("N", "S")):
        ha, hb = arms[a_name], arms[b_name]
        diag += 2.0 / (ha * hb)
        for name, arm in ((a_name, ha), (b_name, hb)):
            nb = nbrs[name]
            keep = nb >= 0
            rows.append(np.nonzero(keep)[0])
            cols.append(nb[keep])
            vals.append((-2.0 / (arm * (ha + hb)))[keep])
    vals.insert(0, diag)
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    return _Mesh((float(xs[0]), float(ys[0])), float(h), inside, index, A)


# ---------------------------------------------------------------- solvers

def _inverse_iteration(A, tol=1e-12, max_iter=500):
    """Smallest eigenvalue of A by inverse power iteration with shift 0."""
    lu = splu(A)
    v = np.ones(A.shape[0]) / math.sqrt(A.shape[0])
    lam = math.inf
    history = []
    for it in range(1, max_iter + 1):
        w = lu.solve(v)
        nw = float(np.linalg.norm(w))
        new = 1.0 / nw
        v = w / nw
        history.append(new)
        if abs(new - lam) <= tol * new:
            return new, v, it
        lam = new
    raise ConvergenceError("inverse iteration did not converge",
                           {"iterations": max_iter, "last": history[-5:], "tol": tol})


@dataclass(frozen=True)
class EigenResult:
    value: float
    coarse: float
    fine: float
    h: float
    nodes: int
    iterations: int

    def as_dict(self):
        return {"lambda1": self.value, "lambda1_h": self.coarse, "lambda1_h2": self.fine,
                "h": self.h, "nodes_h2": self.nodes, "iterations": self.iterations}


def fd_eigen(spec: DomainSpec, h: float) -> EigenResult:
    """lambda_1 on spacings h and h/2 and their Richardson extrapolation."""
    coarse, _, it1 = _inverse_iteration(_assemble(spec, h).A)
    mesh = _assemble(spec, 0.5 * h)
    fine, _, it2 = _inverse_iteration(mesh.A)
    return EigenResult((4.0 * fine - coarse) / 3.0, coarse, fine, float(h), mesh.n, it1 + it2)


def fd_lambda1(spec: DomainSpec, h: float) -> float:
    """Principal Dirichlet eigenvalue of -Laplace, Richardson-extrapolated over h and h/2."""
    return fd_eigen(spec, h).value


def fd_eigenfunction(spec: DomainSpec, h: float) -> tuple[float, Grid2D]:
    """(lambda_1 at spacing h, positive eigenvector normalised to max 1)."""
    mesh = _assemble(spec, h)
    lam, v, _ = _inverse_iteration(mesh.A)
    v = v / v[np.argmax(np.abs(v))]
    return lam, mesh.grid(v)


def fd_torsion_hierarchy(spec: DomainSpec, k: int, h: float) -> list[Grid2D]:
    """u_1, ..., u_k with -Laplace u_1 = 1, -Laplace u_j = u_{j-1}, zero on the boundary.

    E_x[tau^j] = 2^j j! u_j(x).
    """
    if int(k) != k or k < 1:
        raise DomainError("k must be an integer >= 1")
    mesh = _assemble(spec, h)
    lu = splu(mesh.A)
    out = []
    rhs = np.ones(mesh.n)
    for _ in range(int(k)):
        u = lu.solve(rhs)
        if not np.all(np.isfinite(u)):
            raise ConvergenceError("torsion solve produced non-finite values", {"h": h})
        out.append(mesh.grid(u))
        rhs = u
    return out


def fd_moment(spec: DomainSpec, k: int, h: float, x=None) -> float:
    """E_x[tau^k] from the k-th torsion function, Richardson-extrapolated over h and h/2.

    x must be a node of the coarse grid (the centre is); elsewhere the
    bilinear interpolation error is not extrapolated away.
    """
    x = spec.center if x is None else np.asarray(x, dtype=float)
    scale = 2.0 ** k * math.factorial(int(k))
    coarse = fd_torsion_hierarchy(spec, k, h)[-1].value_at(x)
    fine = fd_torsion_hierarchy(spec, k, 0.5 * h)[-1].value_at(x)
    return scale * (4.0 * fine - coarse) / 3.0


def fd_sup_mean_exit(spec: DomainSpec, h: float) -> float:
    """sup_x E_x[tau] = 2 max u_1, from refined grid maxima on h and h/2 with Richardson."""
    coarse = fd_torsion_hierarchy(spec, 1, h)[0].peak()[0]
    fine = fd_torsion_hierarchy(spec, 1, 0.5 * h)[0].peak()[0]
    return 2.0 * (4.0 * fine - coarse) / 3.0
