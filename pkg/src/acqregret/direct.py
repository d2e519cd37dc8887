"""
DIRECT (DIviding RECTangles) global maximization over a box.

The box is mapped to the unit cube.  Every rectangle is a hyper-rectangle
with side ``3**-level[j]`` along axis ``j`` and the objective is only ever
sampled at rectangle centers.  Each iteration picks the potentially optimal
rectangles (the lower-right convex hull of size vs. negated value, with the
usual ``epsilon`` slack) and trisects them along their longest sides, the
side with the best new sample being split first.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from . import _fast_opt
from .domain import Domain
from .exceptions import ConfigError, DomainError
from .local_search import OptResult

__all__ = ["DirectConfig", "Direct", "direct_maximize"]


@dataclass(frozen=True)
class DirectConfig:
    max_evals: int = 10000
    max_depth: int = 60
    epsilon_po: float = 1e-4

    def __post_init__(self):
        if self.max_evals < 1 or self.max_depth < 1:
            raise ConfigError("max_evals and max_depth must be >= 1")
        if self.epsilon_po < 0:
            raise ConfigError("epsilon_po must be nonnegative")


@dataclass(frozen=True)
class Rect:
    center: np.ndarray
    side_levels: np.ndarray
    f_center: float
    index: int

    @property
    def measure(self) -> float:
        """Volume, so that a partition's measures sum to one."""
        return float(3.0 ** -float(np.sum(self.side_levels)))

    @property
    def radius(self) -> float:
        """Center-to-vertex distance, the size used for hull selection."""
        return 0.5 * float(np.sqrt(np.sum(9.0 ** -self.side_levels.astype(float))))


def _lower_right_hull(points):
    """Indices (into ``points``) on the lower convex hull, left to right.

    ``points`` are ``(size, f)`` pairs sorted by increasing size with the
    first one holding the minimum ``f``.  Collinear points are kept.
    """
    hull = []
    for i, (x, y) in enumerate(points):
        while len(hull) >= 2:
            x1, y1 = points[hull[-2]]
            x2, y2 = points[hull[-1]]
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) < 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


class Direct:
    """Stateful DIRECT run; minimizes ``-acq`` on the unit cube internally.

    Parameters
    ----------
    acq : handle
        Object with ``value(x) -> float`` (maximization orientation).  If it
        also has ``value_rows(P)``, the samples of one division are passed
        in a single call.
    domain : Domain
    cfg : DirectConfig
    """

    def __init__(self, acq, domain: Domain, cfg: DirectConfig | None = None):
        if domain.degenerate:
            raise DomainError(f"degenerate domain {domain}")
        self.acq = acq
        self.domain = domain
        self.cfg = cfg or DirectConfig()
        self.dim = domain.dim
        self._lo = domain.lower
        self._w = domain.widths
        self._rows = getattr(acq, "value_rows", None)
        self.centers = []
        self.levels = []
        self.lsum = []
        self.fvals = []
        self.version = []
        self.groups = {}
        self.n_evals = 0
        self.best_f = math.inf
        self.best_idx = -1
        self.best_trace = []
        self.n_iterations = 0

    def _evaluate(self, U):
        """Negated acquisition at the rows of ``U`` (unit coordinates)."""
        P = self._lo + U * self._w
        if self._rows is not None:
            f = -self._rows(P)
        else:
            f = -np.array([self.acq.value(p) for p in P])
        self.n_evals += len(f)
        best = self.best_f
        for v in f.tolist():
            if v < best:
                best = v
            self.best_trace.append(-best)
        return f

    def _add(self, u, lv, f, lsum):
        idx = len(self.centers)
        self.centers.append(u)
        self.levels.append(lv)
        self.lsum.append(lsum)
        self.fvals.append(f)
        self.version.append(0)
        self._push(idx)
        if f < self.best_f:
            self.best_f, self.best_idx = f, idx
        return idx

    def _push(self, idx):
        heapq.heappush(
            self.groups.setdefault(self.lsum[idx], []),
            (self.fvals[idx], idx, self.version[idx]),
        )

    def _group_min(self, key):
        heap = self.groups[key]
        while heap and heap[0][2] != self.version[heap[0][1]]:
            heapq.heappop(heap)
        if not heap:
            del self.groups[key]
            return None
        return heap[0][1]

    def _radius(self, lsum):
        # only the longest sides are ever split, so per-axis levels differ
        # by at most one and the level sum fixes the shape
        d = self.dim
        m, k = divmod(lsum, d)
        return 0.5 * math.sqrt((d - k) * 9.0**-m + k * 9.0 ** -(m + 1))

    def potentially_optimal(self):
        """Indices of the potentially optimal rectangles, small to large."""
        cands = []
        for key in sorted(self.groups, reverse=True):
            idx = self._group_min(key)
            if idx is not None:
                cands.append((self._radius(key), self.fvals[idx], idx))
        if not cands:
            return []
        # leftmost hull point: minimum f, largest size among ties
        f_lo = min(c[1] for c in cands)
        start = max(i for i, c in enumerate(cands) if c[1] == f_lo)
        cands = cands[start:]
        pts = [(c[0], c[1]) for c in cands]
        hull = _lower_right_hull(pts)
        threshold = self.best_f - self.cfg.epsilon_po * abs(self.best_f)
        chosen = []
        for h, i in enumerate(hull):
            if h + 1 < len(hull):
                j = hull[h + 1]
                slope = (pts[j][1] - pts[i][1]) / (pts[j][0] - pts[i][0])
                if pts[i][1] - slope * pts[i][0] > threshold:
                    continue
            chosen.append(cands[i][2])
        return chosen

    def _divide(self, idx):
        lv = list(self.levels[idx])
        lmin = min(lv)
        axes = [i for i, level in enumerate(lv) if level == lmin]
        k = len(axes)
        delta = 3.0 ** -(lmin + 1)
        U = np.tile(self.centers[idx], (2 * k, 1))
        for a, i in enumerate(axes):
            U[2 * a, i] += delta
            U[2 * a + 1, i] -= delta
        f = self._evaluate(U).tolist()
        order = sorted(range(k), key=lambda a: (min(f[2 * a], f[2 * a + 1]), axes[a]))
        lsum = self.lsum[idx]
        for a in order:
            lv[axes[a]] += 1
            lsum += 1
            child = tuple(lv)
            self._add(U[2 * a], child, f[2 * a], lsum)
            self._add(U[2 * a + 1], child, f[2 * a + 1], lsum)
        self.levels[idx] = tuple(lv)
        self.lsum[idx] = lsum
        self.version[idx] += 1
        self._push(idx)

    def run(self, compiled: bool = True):
        """Run to the budget.  Fused acquisition handles take the compiled
        loop unless ``compiled`` is false; both produce the same partition."""
        fast = getattr(self.acq, "fast_args", None) if compiled else None
        if fast is not None:
            return self._run_compiled(fast)
        c0 = np.full(self.dim, 0.5)
        self._add(c0, (0,) * self.dim, float(self._evaluate(c0[None, :])[0]), 0)
        cfg = self.cfg
        d = self.dim
        while self.n_evals < cfg.max_evals:
            chosen = [i for i in self.potentially_optimal()
                      if self.lsum[i] // d < cfg.max_depth]
            if not chosen:
                break
            self.n_iterations += 1
            for idx in chosen:
                if self.n_evals >= cfg.max_evals:
                    break
                self._divide(idx)
        return self

    def _run_compiled(self, fast):
        cfg = self.cfg
        centers, levels, lsum, fvals, n, best, trace, iters = _fast_opt.direct_run(
            fast, self._lo, self._w, cfg.max_evals, cfg.max_depth, cfg.epsilon_po)
        self.centers = list(centers[:n])
        self.levels = [tuple(int(v) for v in row) for row in levels[:n]]
        self.lsum = lsum[:n].tolist()
        self.fvals = fvals[:n].tolist()
        self.version = [0] * n
        self.n_evals = len(trace)
        self.best_idx = int(best)
        self.best_f = self.fvals[best]
        self.best_trace = trace.tolist()
        self.n_iterations = int(iters)
        if hasattr(self.acq, "n_evals"):
            self.acq.n_evals += self.n_evals
        return self

    def rects(self):
        return [
            Rect(self.centers[i], np.array(self.levels[i]), self.fvals[i], i)
            for i in range(len(self.centers))
        ]

    @property
    def x_best(self) -> np.ndarray:
        return self.domain.from_unit(self.centers[self.best_idx])


def direct_maximize(acq, domain: Domain, cfg: DirectConfig | None = None) -> OptResult:
    """Deterministic DIRECT maximization of ``acq`` over ``domain``.

    The evaluation budget is checked before each rectangle division, so a
    run may overshoot ``max_evals`` by at most ``2 d - 1`` samples.
    """
    t0 = time.perf_counter()
    cfg = cfg or DirectConfig()
    fast = getattr(acq, "fast_args", None)
    if fast is not None:
        # skip materializing the partition as Python objects
        if domain.degenerate:
            raise DomainError(f"degenerate domain {domain}")
        centers, _, _, fvals, _, best, trace, _ = _fast_opt.direct_run(
            fast, domain.lower, domain.widths, cfg.max_evals, cfg.max_depth, cfg.epsilon_po)
        acq.n_evals += len(trace)
        x_best, value, n_evals = domain.from_unit(centers[best]), -fvals[best], len(trace)
    else:
        run = Direct(acq, domain, cfg).run()
        x_best, value, n_evals = run.x_best, -run.best_f, run.n_evals
    return OptResult(
        x_star=x_best,
        value=float(value),
        strategy="global",
        n_evals=n_evals,
        wall_time=time.perf_counter() - t0,
        converged=True,
        start_points=np.empty((0, domain.dim)),
    )
