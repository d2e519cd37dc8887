"""
Bound-constrained limited-memory quasi-Newton ascent and its multi-start
wrapper.

The search minimizes the negated acquisition.  Each iteration

1. fixes the variables sitting on a bound whose gradient points outward,
2. builds an L-BFGS direction on the remaining (free) variables,
3. runs a strong-Wolfe line search capped at the first bound crossing,

and the curvature history is cleared whenever the fixed set changes.
Iteration stops once an accepted step is shorter than ``eps_opt``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _fast_opt
from .domain import Domain
from .exceptions import ConfigError, DomainError

__all__ = [
    "LocalSearchConfig",
    "OptResult",
    "FunctionHandle",
    "local_maximize",
    "maximize_from_starts",
    "multi_start_maximize",
    "multi_start_prefixes",
    "start_points",
]


@dataclass(frozen=True)
class LocalSearchConfig:
    eps_opt: float = 1e-5
    max_iters: int = 200
    memory: int = 10
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search_evals: int = 30

    def __post_init__(self):
        if not self.eps_opt > 0:
            raise ConfigError(f"eps_opt must be positive, got {self.eps_opt}")
        if self.max_iters < 1 or self.memory < 1 or self.max_line_search_evals < 1:
            raise ConfigError("max_iters, memory and max_line_search_evals must be >= 1")
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ConfigError(
                f"need 0 < c1 < c2 < 1, got c1={self.wolfe_c1}, c2={self.wolfe_c2}"
            )


@dataclass
class OptResult:
    """A maximizer candidate found by one of the acquisition optimizers.

    ``strategy`` is ``"global"``, ``"local"`` or ``"multi_local(N)"``.
    """

    x_star: np.ndarray
    value: float
    strategy: str
    n_evals: int
    wall_time: float
    converged: bool
    start_points: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    @property
    def n_starts(self) -> int:
        return len(self.start_points)


class FunctionHandle:
    """Adapt plain callables to the acquisition-handle protocol."""

    def __init__(self, fun, grad=None):
        self.fun = fun
        self.grad = grad
        self.n_evals = 0

    def value(self, x):
        self.n_evals += 1
        return float(self.fun(x))

    def value_and_grad(self, x):
        self.n_evals += 1
        return float(self.fun(x)), np.asarray(self.grad(x), dtype=float)

    def __call__(self, x):
        return self.value(x)


def _two_loop(q, S, Y, RHO):
    q = q.copy()
    a = np.empty(len(S))
    for i in range(len(S) - 1, -1, -1):
        a[i] = RHO[i] * (S[i] @ q)
        q -= a[i] * Y[i]
    gamma = (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
    r = gamma * q
    for i in range(len(S)):
        b = RHO[i] * (Y[i] @ r)
        r += (a[i] - b) * S[i]
    return r


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic through two points with slopes, or None."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = db - da + 2.0 * d2
    if denom == 0:
        return None
    return b - (b - a) * (db + d2 - d1) / denom


class _LineSearch:
    """Strong-Wolfe line search on ``phi(a) = f(clip(x + a p))``, ``a <= amax``."""

    def __init__(self, fg, x, f0, dphi0, p, amax, lo, hi, cfg):
        self.fg, self.x, self.p = fg, x, p
        self.f0, self.dphi0 = f0, dphi0
        self.amax, self.lo, self.hi = amax, lo, hi
        self.c1, self.c2 = cfg.wolfe_c1, cfg.wolfe_c2
        self.budget = cfg.max_line_search_evals
        self.evals = 0
        self.smallest = math.inf

    def _phi(self, a):
        xa = np.minimum(np.maximum(self.x + a * self.p, self.lo), self.hi)
        # a step that stops at a bound must land on it, not one ulp short
        tol = 1e-12 * (self.hi - self.lo)
        xa = np.where((self.p > 0) & (self.hi - xa <= tol), self.hi, xa)
        xa = np.where((self.p < 0) & (xa - self.lo <= tol), self.lo, xa)
        fa, ga = self.fg(xa)
        self.evals += 1
        self.smallest = min(self.smallest, a)
        return (a, xa, fa, ga, ga @ self.p)

    def _armijo(self, pt):
        return pt[2] <= self.f0 + self.c1 * pt[0] * self.dphi0

    def _curvature(self, pt):
        return abs(pt[4]) <= -self.c2 * self.dphi0

    def run(self):
        """Return the accepted point tuple ``(a, x, f, g, dphi)`` or None."""
        prev = (0.0, self.x, self.f0, None, self.dphi0)
        a = min(1.0, self.amax)
        first = True
        while self.evals < self.budget:
            cur = self._phi(a)
            if not self._armijo(cur) or (not first and cur[2] >= prev[2]):
                return self._zoom(prev, cur)
            if self._curvature(cur):
                return cur
            if cur[4] >= 0:
                return self._zoom(cur, prev)
            if a >= self.amax:
                return cur
            prev, first = cur, False
            a = min(2.0 * a, self.amax)
        return prev if prev[0] > 0 else None

    def _zoom(self, lo, hi):
        while self.evals < self.budget:
            a_lo, a_hi = lo[0], hi[0]
            width = abs(a_hi - a_lo)
            if width <= 1e-16 * max(1.0, abs(a_lo)):
                break
            a = None
            if lo[4] is not None and hi[4] is not None:
                a = _cubic_min(a_lo, lo[2], lo[4], a_hi, hi[2], hi[4])
            left, right = min(a_lo, a_hi), max(a_lo, a_hi)
            if a is None or not (left + 0.1 * width <= a <= right - 0.1 * width):
                a = 0.5 * (a_lo + a_hi)
            cur = self._phi(a)
            if not self._armijo(cur) or cur[2] >= lo[2]:
                hi = cur
            else:
                if self._curvature(cur):
                    return cur
                if cur[4] * (a_hi - a_lo) >= 0:
                    hi = lo
                lo = cur
        # sufficient decrease without curvature is still progress
        return lo if lo[0] > 0 else None


def _maximize_from(handle, x0, lo, hi, cfg):
    """Projected L-BFGS on ``-a``; returns ``(x, value, evals, converged)``."""

    def fg(x):
        v, g = handle.value_and_grad(x)
        return -v, -g

    x = x0.astype(float, copy=True)
    f, g = fg(x)
    evals = 1
    S, Y, RHO = [], [], []
    free_prev = None
    converged = False
    for _ in range(cfg.max_iters):
        free = ~(((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0)))
        if free_prev is not None and not np.array_equal(free, free_prev):
            S, Y, RHO = [], [], []
        free_prev = free
        gf = np.where(free, g, 0.0)
        gnorm = math.hypot(*gf)  # scaled, so gradients near 1e-170 do not square to 0
        if gnorm == 0.0:
            converged = True
            break
        p = -_two_loop(gf, S, Y, RHO) if S else -gf / gnorm
        p[~free] = 0.0
        # a quasi-Newton direction may still push a free variable through its bound
        p[((x <= lo) & (p < 0)) | ((x >= hi) & (p > 0))] = 0.0
        dphi = g @ p
        if not dphi < 0:
            S, Y, RHO = [], [], []
            p = -gf / gnorm
            dphi = -gnorm
        with np.errstate(divide="ignore", invalid="ignore"):
            room = np.where(p > 0, (hi - x) / p, np.where(p < 0, (lo - x) / p, np.inf))
        amax = float(np.min(room))
        if not amax > 0:
            converged = True
            break
        ls = _LineSearch(fg, x, f, dphi, p, amax, lo, hi, cfg)
        acc = ls.run()
        evals += ls.evals
        if acc is None:
            # no decrease even at steps shorter than the tolerance: stationary
            converged = ls.smallest * math.hypot(*p) <= cfg.eps_opt
            break
        _, x_new, f_new, g_new, _ = acc
        s = x_new - x
        yv = np.where(free, g_new - g, 0.0)
        sy, yy = s @ yv, yv @ yv
        # yy can underflow to 0 on nearly flat surfaces while sy stays positive
        if yy > 0 and sy > 2.2e-16 * yy:
            S.append(s)
            Y.append(yv)
            RHO.append(1.0 / sy)
            if len(S) > cfg.memory:
                del S[0], Y[0], RHO[0]
        x, f, g = x_new, f_new, g_new
        # a step cut short by a bound only changes the active set
        if acc[0] < amax and math.sqrt(s @ s) <= cfg.eps_opt:
            converged = True
            break
    return x, -f, evals, converged


def local_maximize(acq, domain: Domain, x0, cfg: LocalSearchConfig | None = None) -> OptResult:
    """Single-start quasi-Newton ascent of ``acq`` inside ``domain``.

    Parameters
    ----------
    acq : handle
        Object with ``value_and_grad(x) -> (float, ndarray)``.
    domain : Domain
    x0 : array_like
        Starting point, must lie in ``domain``.
    cfg : LocalSearchConfig, optional
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (domain.dim,) or not domain.contains(x0):
        raise DomainError(f"start point {x0} is outside {domain}")
    return _local(acq, domain, x0, cfg or LocalSearchConfig())


def _local(acq, domain, x0, cfg):
    t0 = time.perf_counter()
    fast = getattr(acq, "fast_args", None)
    if fast is not None:
        x, value, evals, converged = _fast_opt.lbfgs_run(
            fast, x0, domain.lower, domain.upper, cfg.eps_opt, cfg.max_iters, cfg.memory,
            cfg.wolfe_c1, cfg.wolfe_c2, cfg.max_line_search_evals)
        acq.n_evals += evals
    else:
        x, value, evals, converged = _maximize_from(acq, x0, domain.lower, domain.upper, cfg)
    return OptResult(
        x_star=x,
        value=float(value),
        strategy="local",
        n_evals=evals,
        wall_time=time.perf_counter() - t0,
        converged=converged,
        start_points=x0[None, :].copy(),
    )


def start_points(domain: Domain, n: int, seed: int) -> np.ndarray:
    """Uniform start points drawn row by row from one seeded stream.

    The first ``k`` rows for ``n`` are therefore the rows for ``k``.
    """
    return domain.sample(np.random.Generator(np.random.PCG64(seed)), n)


def _best_of(results, n, strategy):
    best = results[0]
    for r in results[1:n]:
        if r.value > best.value:
            best = r
    return OptResult(
        x_star=best.x_star,
        value=best.value,
        strategy=strategy,
        n_evals=sum(r.n_evals for r in results[:n]),
        wall_time=sum(r.wall_time for r in results[:n]),
        converged=best.converged,
        start_points=np.array([r.start_points[0] for r in results[:n]]),
    )


def multi_start_maximize(acq, domain: Domain, n_starts: int,
                         cfg: LocalSearchConfig | None = None, seed: int = 0) -> OptResult:
    """Best of ``n_starts`` local searches from seeded uniform starts.

    Ties go to the lowest start index.  ``wall_time`` covers drawing the
    starts, all searches and the reduction.
    """
    if n_starts < 1:
        raise ConfigError(f"need at least one start, got {n_starts}")
    t0 = time.perf_counter()
    starts = start_points(domain, n_starts, seed)
    cfg = cfg or LocalSearchConfig()
    results = [_local(acq, domain, x0, cfg) for x0 in starts]
    out = _best_of(results, n_starts, f"multi_local({n_starts})")
    out.wall_time = time.perf_counter() - t0
    return out


def maximize_from_starts(acq, domain: Domain, starts,
                         cfg: LocalSearchConfig | None = None) -> OptResult:
    """Best of local searches from the given start rows.

    ``wall_time`` covers the searches and the reduction only, so callers
    that share one start set across several counts can time each count
    without the generator setup.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    if starts.shape[0] < 1 or starts.shape[1] != domain.dim:
        raise ConfigError(f"starts must be an (n, {domain.dim}) array, got {starts.shape}")
    cfg = cfg or LocalSearchConfig()
    t0 = time.perf_counter()
    results = [_local(acq, domain, x0, cfg) for x0 in starts]
    out = _best_of(results, len(results), f"multi_local({len(results)})")
    out.wall_time = time.perf_counter() - t0
    return out


def multi_start_prefixes(acq, domain: Domain, counts, cfg: LocalSearchConfig | None = None,
                         seed: int = 0) -> dict:
    """Multi-start results for several start counts from one set of searches.

    Because start sets are nested prefixes, the result for ``N`` is the best
    of the first ``N`` searches of the largest run.  Each ``wall_time`` is
    the summed time of its own ``N`` searches.
    """
    counts = sorted(set(int(c) for c in counts))
    if not counts or counts[0] < 1:
        raise ConfigError(f"start counts must be >= 1, got {counts}")
    starts = start_points(domain, counts[-1], seed)
    cfg = cfg or LocalSearchConfig()
    results = [_local(acq, domain, x0, cfg) for x0 in starts]
    return {n: _best_of(results, n, f"multi_local({n})") for n in counts}
