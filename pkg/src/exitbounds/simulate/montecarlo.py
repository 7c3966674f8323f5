"""Monte Carlo exit times of Brownian motion with a Brownian-bridge crossing test.

Paths are simulated in fixed chunks of ``CHUNK`` samples. Chunk ``c`` owns the
generator ``Philox(SeedSequence(seed, spawn_key=(c,)))``, so sample ``i`` is
always drawn from the same stream regardless of how chunks are scheduled
across threads, and the reduction runs over the concatenated samples in index
order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np

from ..domains import (
    Ball,
    DomainSpec,
    Ellipse,
    Slab,
)
from ..errors import DomainError, RunawayError

CHUNK = 4096
MAX_STEPS = 10 ** 9
DEFAULT_SEED = 20240607

_BALL, _HALFSPACE, _ELLIPSE = 0, 1, 2
# exp(-2 d1 d2 / h) below this is treated as zero; saves a uniform draw per step
_CROSS_FLOOR = 1e-12


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    mean: float
    std_error: float
    n_samples: int
    step: float
    seed: int
    start: tuple

    def as_dict(self):
        return {"p": self.p, "mean": self.mean, "std_error": self.std_error,
                "n_samples": self.n_samples, "step": self.step, "seed": self.seed,
                "start": list(self.start)}


def default_step(spec: DomainSpec) -> float:
    return (spec.inradius / 50.0) ** 2


def _encode(spec):
    """Flatten a domain into arrays the compiled kernel understands."""
    if isinstance(spec, Ball):
        return _BALL, np.array([spec.radius], dtype=float), np.zeros((0, spec.dim)), np.zeros(0)
    if isinstance(spec, Ellipse):
        return _ELLIPSE, np.array([spec.a, spec.b], dtype=float), np.zeros((0, 2)), np.zeros(0)
    hs = spec.halfspaces()
    if hs is None:
        raise DomainError(f"cannot simulate {type(spec).__name__}")
    normals, offsets = hs
    return _HALFSPACE, np.zeros(0), np.ascontiguousarray(normals, dtype=float), \
        np.ascontiguousarray(offsets, dtype=float)


@numba.njit(cache=True, nogil=True)
def _ball_depth(r, x):
    r2 = 0.0
    for i in range(x.shape[0]):
        r2 += x[i] * x[i]
    return r - math.sqrt(r2)


@numba.njit(cache=True, nogil=True)
def _ellipse_depth(a, b, x):
    # (1 - F) / |grad F|, a first-order distance proxy, capped at the semi-minor axis
    F = (x[0] / a) ** 2 + (x[1] / b) ** 2
    g = 2.0 * math.sqrt((x[0] / (a * a)) ** 2 + (x[1] / (b * b)) ** 2)
    cap = min(a, b)
    if g == 0.0:
        return cap
    return min((1.0 - F) / g, cap)


@numba.njit(cache=True, nogil=True)
def _bridge_exit(d1, d2, h, gen):
    """True if a bridge between points at depths d1, d2 is judged to have crossed.

    Curved boundaries use the tangent half-space at the nearest boundary point.
    """
    e = math.exp(-2.0 * d1 * d2 / h)
    return e > _CROSS_FLOOR and gen.random() < e


@numba.njit(cache=True, nogil=True)
def _run_curved(gen, kind, params, x0, h, horizon, max_steps, out, alive):
    dim = x0.shape[0]
    sq = math.sqrt(h)
    x = np.empty(dim)
    y = np.empty(dim)
    for i in range(out.shape[0]):
        for k in range(dim):
            x[k] = x0[k]
        dx = _ball_depth(params[0], x) if kind == _BALL else _ellipse_depth(params[0], params[1], x)
        steps = 0
        while True:
            if steps >= max_steps:
                return i
            steps += 1
            t_next = steps * h
            for k in range(dim):
                y[k] = x[k] + sq * gen.standard_normal()
            if kind == _BALL:
                dy = _ball_depth(params[0], y)
            else:
                dy = _ellipse_depth(params[0], params[1], y)
            if dy <= 0.0 or _bridge_exit(dx, dy, h, gen):
                out[i] = t_next - 0.5 * h
                alive[i] = False
                break
            if t_next >= horizon:
                out[i] = t_next
                alive[i] = True
                break
            for k in range(dim):
                x[k] = y[k]
            dx = dy
    return -1


@numba.njit(cache=True, nogil=True)
def _run_polytope(gen, normals, offsets, x0, h, horizon, max_steps, out, alive):
    # sx[f], sy[f]: slack of face f at the current and proposed point; the
    # bridge survives every face independently (product of single-face factors)
    dim = x0.shape[0]
    nf = normals.shape[0]
    sq = math.sqrt(h)
    x = np.empty(dim)
    sx = np.empty(nf)
    sy = np.empty(nf)
    dz = np.empty(dim)
    for i in range(out.shape[0]):
        for k in range(dim):
            x[k] = x0[k]
        for f in range(nf):
            s = offsets[f]
            for k in range(dim):
                s -= normals[f, k] * x[k]
            sx[f] = s
        steps = 0
        while True:
            if steps >= max_steps:
                return i
            steps += 1
            t_next = steps * h
            for k in range(dim):
                dz[k] = sq * gen.standard_normal()
            outside = False
            keep = 1.0
            for f in range(nf):
                s = sx[f]
                for k in range(dim):
                    s -= normals[f, k] * dz[k]
                sy[f] = s
                if s <= 0.0:
                    outside = True
                    break
                e = math.exp(-2.0 * sx[f] * s / h)
                if e > _CROSS_FLOOR:
                    keep *= 1.0 - e
            if outside or (keep < 1.0 and gen.random() >= keep):
                out[i] = t_next - 0.5 * h
                alive[i] = False
                break
            if t_next >= horizon:
                out[i] = t_next
                alive[i] = True
                break
            for k in range(dim):
                x[k] += dz[k]
            for f in range(nf):
                sx[f] = sy[f]
    return -1


def _run_chunk(gen, kind, params, normals, offsets, x0, h, horizon, max_steps, out, alive):
    """Simulate len(out) paths; out[i] is the exit time, alive[i] marks paths cut at horizon.

    Returns the index of a path that hit ``max_steps``, or -1.
    """
    if kind == _HALFSPACE:
        return _run_polytope(gen, normals, offsets, x0, h, horizon, max_steps, out, alive)
    return _run_curved(gen, kind, params, x0, h, horizon, max_steps, out, alive)


def _chunk_generator(seed, chunk):
    ss = np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1), spawn_key=(int(chunk),))
    return np.random.Generator(np.random.Philox(ss))


def _resolve_threads(threads):
    if threads is None:
        threads = int(os.environ.get("EXITBOUNDS_THREADS", "1"))
    if threads < 1:
        raise DomainError("threads must be >= 1")
    return threads


def _start_point(spec, x):
    x = spec.center if x is None else np.asarray(x, dtype=float).ravel()
    if x.shape != (spec.dim,):
        raise DomainError(f"start has dimension {x.shape[0]}, domain has {spec.dim}")
    return np.ascontiguousarray(x, dtype=float)


def exit_time_samples(spec: DomainSpec, x=None, n: int = 10_000, step: Optional[float] = None,
                      seed: int = DEFAULT_SEED, horizon: float = math.inf,
                      threads: Optional[int] = None, max_steps: int = MAX_STEPS):
    """Draw n exit times from x. Returns (times, alive) arrays.

    ``alive[i]`` is True when path i was still inside at ``horizon``; its time
    is then the horizon itself. Starts on or outside the boundary give 0.
    """
    step = default_step(spec) if step is None else float(step)
    if not step > 0:
        raise DomainError("step must be > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    x0 = _start_point(spec, x)
    times = np.zeros(n)
    alive = np.zeros(n, dtype=bool)
    if spec.signed_distance(x0) >= 0:
        return times, alive
    kind, params, normals, offsets = _encode(spec)
    n_chunks = -(-n // CHUNK)

    def work(c):
        lo, hi = c * CHUNK, min((c + 1) * CHUNK, n)
        gen = _chunk_generator(seed, c)
        bad = _run_chunk(gen, kind, params, normals, offsets, x0, step, float(horizon),
                         int(max_steps), times[lo:hi], alive[lo:hi])
        if bad >= 0:
            raise RunawayError(f"path {lo + bad} exceeded {max_steps} steps; is the domain bounded?")

    threads = _resolve_threads(threads)
    if threads == 1 or n_chunks == 1:
        for c in range(n_chunks):
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(n_chunks)))
    return times, alive


def sample_exit_time(spec: DomainSpec, x, step: float, rng: np.random.Generator) -> float:
    """One exit time drawn with the caller's generator."""
    if not step > 0:
        raise DomainError("step must be > 0")
    x0 = _start_point(spec, x)
    if spec.signed_distance(x0) >= 0:
        raise DomainError("start point must lie strictly inside the domain")
    kind, params, normals, offsets = _encode(spec)
    out = np.zeros(1)
    alive = np.zeros(1, dtype=bool)
    bad = _run_chunk(rng, kind, params, normals, offsets, x0, float(step), math.inf,
                     MAX_STEPS, out, alive)
    if bad >= 0:
        raise RunawayError(f"path exceeded {MAX_STEPS} steps")
    return float(out[0])


def _summarise(values, p, n, step, seed, x0):
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MomentEstimate(float(p), mean, se, int(n), float(step), int(seed), tuple(map(float, x0)))


def estimate_moments(spec: DomainSpec, x=None, ps: Sequence[float] = (1.0,), n: int = 10_000,
                     step: Optional[float] = None, seed: int = DEFAULT_SEED,
                     threads: Optional[int] = None) -> list[MomentEstimate]:
    """Estimates of E_x[tau^p] for several p from one shared set of paths."""
    if n < 100:
        raise DomainError("n must be >= 100")
    if spec.bounded is False and not isinstance(spec, Slab):
        raise DomainError("domain must be bounded")
    step = default_step(spec) if step is None else float(step)
    x0 = _start_point(spec, x)
    out = []
    need_paths = any(p != 0 for p in ps)
    tau = exit_time_samples(spec, x0, n, step, seed, threads=threads)[0] if need_paths else None
    for p in ps:
        if p == 0:
            out.append(MomentEstimate(0.0, 1.0, 0.0, int(n), step, int(seed), tuple(map(float, x0))))
        else:
            out.append(_summarise(tau ** p, p, n, step, seed, x0))
    return out


def estimate_moment(spec: DomainSpec, x=None, p: float = 1.0, n: int = 10_000,
                    step: Optional[float] = None, seed: int = DEFAULT_SEED,
                    threads: Optional[int] = None) -> MomentEstimate:
    return estimate_moments(spec, x, (p,), n, step, seed, threads)[0]


@dataclass(frozen=True)
class SurvivalEstimate:
    t: float
    prob: float
    std_error: float
    n_samples: int


def estimate_survival(spec: DomainSpec, x=None, ts: Sequence[float] = (1.0,), n: int = 10_000,
                      step: Optional[float] = None, seed: int = DEFAULT_SEED,
                      threads: Optional[int] = None) -> list[SurvivalEstimate]:
    """P_x(tau > t) for each t, from paths stopped at max(ts)."""
    horizon = float(max(ts))
    times, alive = exit_time_samples(spec, x, n, step, seed, horizon=horizon, threads=threads)
    out = []
    for t in ts:
        ind = alive | (times > t)
        prob = float(np.mean(ind))
        se = math.sqrt(max(prob * (1 - prob), 0.0) / (n - 1)) if n > 1 else 0.0
        out.append(SurvivalEstimate(float(t), prob, se, int(n)))
    return out


@dataclass(frozen=True)
class SupMomentEstimate:
    best: MomentEstimate
    center: MomentEstimate
    center_beaten: bool
    evaluated: list = field(default_factory=list)


def interior_grid(spec: DomainSpec, resolution: int) -> np.ndarray:
    """Interior points of a resolution^d coordinate grid over the bounding box, plus the centre."""
    lo, hi = spec.bounding_box()
    axes = [np.linspace(l, h, resolution + 2)[1:-1] for l, h in zip(lo, hi)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.dim)
    keep = [p for p in mesh if spec.signed_distance(p) < 0]
    return np.vstack([spec.center[None, :]] + ([np.asarray(keep)] if keep else []))


def estimate_sup_moment(spec: DomainSpec, p: float = 1.0, grid_resolution: int = 5,
                        n: int = 10_000, step: Optional[float] = None,
                        seed: int = DEFAULT_SEED, threads: Optional[int] = None) -> SupMomentEstimate:
    """Largest estimate of E_x[tau^p] over the centre and an interior grid.

    Every start reuses the same seed (common random numbers). ``center_beaten``
    is set when some grid start exceeds the centre by more than three combined
    standard errors.
    """
    if not spec.bounded:
        raise DomainError("domain must be bounded")
    points = interior_grid(spec, grid_resolution)
    ests = [estimate_moment(spec, pt, p, n, step, seed, threads) for pt in points]
    centre = ests[0]
    best = max(ests, key=lambda e: e.mean)
    beaten = any(e.mean - centre.mean > 3.0 * math.hypot(e.std_error, centre.std_error)
                 for e in ests[1:])
    return SupMomentEstimate(best, centre, beaten, ests)
