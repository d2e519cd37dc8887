"""
Compiled DIRECT and projected L-BFGS loops for fused acquisition handles.

These mirror :class:`acqregret.direct.Direct` and
``acqregret.local_search._maximize_from`` step for step; the Python versions
serve arbitrary callables and act as reference implementations in tests.
``acq`` below is the tuple returned by ``Acquisition.fast_args``.
"""

import math

import numba as nb
import numpy as np

from ._fastpath import acquisition_point


@nb.njit(cache=True)
def _value(acq, x, scratch):
    kind, X, inv_ls2, s2, alpha, L, family, inc, ucb, sn = acq
    return acquisition_point(kind, x, X, inv_ls2, s2, alpha, L, family,
                             inc, ucb, sn, False, scratch)


@nb.njit(cache=True)
def _neg_value_grad(acq, x, g):
    kind, X, inv_ls2, s2, alpha, L, family, inc, ucb, sn = acq
    v = acquisition_point(kind, x, X, inv_ls2, s2, alpha, L, family,
                          inc, ucb, sn, True, g)
    for j in range(g.shape[0]):
        g[j] = -g[j]
    return -v


# ---------------------------------------------------------------- DIRECT


@nb.njit(cache=True)
def _radius(lsum, d):
    m = lsum // d
    k = lsum - m * d
    return 0.5 * math.sqrt((d - k) * 9.0 ** (-m) + k * 9.0 ** (-(m + 1)))


@nb.njit(cache=True)
def _hull_select(sizes, fs, n, best_f, eps):
    """Potentially optimal candidates given (size asc, f) pairs; returns mask."""
    chosen = np.zeros(n, dtype=np.bool_)
    if n == 0:
        return chosen
    f_lo = fs[0]
    for i in range(n):
        if fs[i] < f_lo:
            f_lo = fs[i]
    start = 0
    for i in range(n):
        if fs[i] == f_lo:
            start = i
    hull = np.empty(n, dtype=np.int64)
    h = 0
    for i in range(start, n):
        x, y = sizes[i], fs[i]
        while h >= 2:
            x1, y1 = sizes[hull[h - 2]], fs[hull[h - 2]]
            x2, y2 = sizes[hull[h - 1]], fs[hull[h - 1]]
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) < 0:
                h -= 1
            else:
                break
        hull[h] = i
        h += 1
    threshold = best_f - eps * abs(best_f)
    for q in range(h):
        i = hull[q]
        if q + 1 < h:
            j = hull[q + 1]
            slope = (fs[j] - fs[i]) / (sizes[j] - sizes[i])
            if fs[i] - slope * sizes[i] > threshold:
                continue
        chosen[i] = True
    return chosen


@nb.njit(cache=True)
def direct_run(acq, lo, w, max_evals, max_depth, eps):
    """Returns (centers, levels, lsum, fvals, n_rects, best_idx, trace, n_iters)."""
    d = lo.shape[0]
    cap = max_evals + 2 * d + 1
    centers = np.empty((cap, d))
    levels = np.zeros((cap, d), dtype=np.int64)
    lsum = np.zeros(cap, dtype=np.int64)
    fvals = np.empty(cap)
    trace = np.empty(cap)
    scratch = np.empty(d)
    xp = np.empty(d)

    n = 0
    n_evals = 0
    best_f = np.inf
    best_idx = -1
    for j in range(d):
        centers[0, j] = 0.5
        xp[j] = lo[j] + 0.5 * w[j]
    f0 = -_value(acq, xp, scratch)
    trace[0] = -f0
    n_evals = 1
    fvals[0] = f0
    n = 1
    best_f, best_idx = f0, 0

    max_key = max_depth * d + d + 1
    grp_idx = np.empty(max_key, dtype=np.int64)
    U = np.empty((2 * d, d))
    fu = np.empty(2 * d)
    axes = np.empty(d, dtype=np.int64)
    order = np.empty(d, dtype=np.int64)
    keyv = np.empty(d)
    n_iters = 0
    while n_evals < max_evals:
        # group minima by level sum; lowest index wins ties
        for k in range(max_key):
            grp_idx[k] = -1
        for i in range(n):
            k = lsum[i]
            g = grp_idx[k]
            if g < 0 or fvals[i] < fvals[g]:
                grp_idx[k] = i
        m = 0
        for k in range(max_key):
            if grp_idx[k] >= 0:
                m += 1
        sizes = np.empty(m)
        fs = np.empty(m)
        ids = np.empty(m, dtype=np.int64)
        q = 0
        for k in range(max_key - 1, -1, -1):
            if grp_idx[k] >= 0:
                sizes[q] = _radius(k, d)
                fs[q] = fvals[grp_idx[k]]
                ids[q] = grp_idx[k]
                q += 1
        mask = _hull_select(sizes, fs, m, best_f, eps)
        any_chosen = False
        for q in range(m):
            if mask[q] and lsum[ids[q]] // d < max_depth:
                any_chosen = True
        if not any_chosen:
            break
        n_iters += 1
        for q in range(m):
            if not (mask[q] and lsum[ids[q]] // d < max_depth):
                continue
            if n_evals >= max_evals:
                break
            idx = ids[q]
            lmin = levels[idx, 0]
            for j in range(1, d):
                if levels[idx, j] < lmin:
                    lmin = levels[idx, j]
            na = 0
            for j in range(d):
                if levels[idx, j] == lmin:
                    axes[na] = j
                    na += 1
            delta = 3.0 ** (-(lmin + 1))
            for a in range(na):
                for r in range(2):
                    for j in range(d):
                        U[2 * a + r, j] = centers[idx, j]
                U[2 * a, axes[a]] += delta
                U[2 * a + 1, axes[a]] -= delta
            for r in range(2 * na):
                for j in range(d):
                    xp[j] = lo[j] + U[r, j] * w[j]
                fu[r] = -_value(acq, xp, scratch)
                if n_evals == 0 or fu[r] < -trace[n_evals - 1]:
                    trace[n_evals] = -fu[r]
                else:
                    trace[n_evals] = trace[n_evals - 1]
                n_evals += 1
            # stable order by (min of the pair, axis)
            for a in range(na):
                order[a] = a
                keyv[a] = min(fu[2 * a], fu[2 * a + 1])
            for a in range(1, na):
                t = order[a]
                b = a - 1
                while b >= 0 and keyv[order[b]] > keyv[t]:
                    order[b + 1] = order[b]
                    b -= 1
                order[b + 1] = t
            s = lsum[idx]
            for oa in range(na):
                a = order[oa]
                levels[idx, axes[a]] += 1
                s += 1
                for r in range(2):
                    c = n
                    for j in range(d):
                        centers[c, j] = U[2 * a + r, j]
                        levels[c, j] = levels[idx, j]
                    lsum[c] = s
                    fvals[c] = fu[2 * a + r]
                    if fvals[c] < best_f:
                        best_f, best_idx = fvals[c], c
                    n += 1
            lsum[idx] = s
    return centers, levels, lsum, fvals, n, best_idx, trace[:n_evals], n_iters


# ---------------------------------------------------------------- L-BFGS


@nb.njit(cache=True)
def _norm(v):
    """Euclidean norm scaled by max |v_j|, so tiny gradients do not square to 0."""
    m = 0.0
    for j in range(v.shape[0]):
        m = max(m, abs(v[j]))
    if m == 0.0:
        return 0.0
    t = 0.0
    for j in range(v.shape[0]):
        t += (v[j] / m) ** 2
    return m * math.sqrt(t)


@nb.njit(cache=True)
def _cubic_min(a, fa, da, b, fb, db):
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return np.nan
    d2 = math.sqrt(disc)
    if b - a < 0:
        d2 = -d2
    denom = db - da + 2.0 * d2
    if denom == 0:
        return np.nan
    return b - (b - a) * (db + d2 - d1) / denom


@nb.njit(cache=True)
def _phi(acq, slot, a, x, p, lo, hi, PA, PX, PG, PF, PD):
    d = x.shape[0]
    for j in range(d):
        v = min(max(x[j] + a * p[j], lo[j]), hi[j])
        # a step that stops at a bound must land on it, not one ulp short
        tol = 1e-12 * (hi[j] - lo[j])
        if p[j] > 0 and hi[j] - v <= tol:
            v = hi[j]
        elif p[j] < 0 and v - lo[j] <= tol:
            v = lo[j]
        PX[slot, j] = v
    PF[slot] = _neg_value_grad(acq, PX[slot], PG[slot])
    s = 0.0
    for j in range(d):
        s += PG[slot, j] * p[j]
    PD[slot] = s
    PA[slot] = a


@nb.njit(cache=True)
def _line_search(acq, x, f0, dphi0, p, amax, lo, hi, c1, c2, budget,
                 PA, PX, PG, PF, PD, stats):
    """Strong-Wolfe search; returns the accepted slot or -1.

    ``stats`` receives [evals, smallest trial step].
    """
    evals = 0
    smallest = np.inf
    PA[0], PF[0], PD[0] = 0.0, f0, dphi0
    PX[0, :] = x
    prev, cur = 0, 1
    a = min(1.0, amax)
    first = True
    lo_s, hi_s = -1, -1
    result = -2  # -2: fell through without zoom
    while evals < budget:
        _phi(acq, cur, a, x, p, lo, hi, PA, PX, PG, PF, PD)
        evals += 1
        smallest = min(smallest, a)
        if not (PF[cur] <= f0 + c1 * a * dphi0) or (not first and PF[cur] >= PF[prev]):
            lo_s, hi_s = prev, cur
            break
        if abs(PD[cur]) <= -c2 * dphi0:
            result = cur
            break
        if PD[cur] >= 0:
            lo_s, hi_s = cur, prev
            break
        if a >= amax:
            result = cur
            break
        prev, cur = cur, prev
        first = False
        a = min(2.0 * a, amax)
    if result >= 0 or lo_s < 0:
        stats[0], stats[1] = evals, smallest
        if result >= 0:
            return result
        return prev if PA[prev] > 0 else -1
    lo_, hi_ = lo_s, hi_s
    free = 3 - lo_ - hi_
    while evals < budget:
        a_lo, a_hi = PA[lo_], PA[hi_]
        width = abs(a_hi - a_lo)
        if width <= 1e-16 * max(1.0, abs(a_lo)):
            break
        a = _cubic_min(a_lo, PF[lo_], PD[lo_], a_hi, PF[hi_], PD[hi_])
        left, right = min(a_lo, a_hi), max(a_lo, a_hi)
        if np.isnan(a) or not (left + 0.1 * width <= a <= right - 0.1 * width):
            a = 0.5 * (a_lo + a_hi)
        c = free
        _phi(acq, c, a, x, p, lo, hi, PA, PX, PG, PF, PD)
        evals += 1
        smallest = min(smallest, a)
        if not (PF[c] <= f0 + c1 * a * dphi0) or PF[c] >= PF[lo_]:
            free, hi_ = hi_, c
        else:
            if abs(PD[c]) <= -c2 * dphi0:
                stats[0], stats[1] = evals, smallest
                return c
            if PD[c] * (a_hi - a_lo) >= 0:
                free, hi_, lo_ = hi_, lo_, c
            else:
                free, lo_ = lo_, c
    stats[0], stats[1] = evals, smallest
    return lo_ if PA[lo_] > 0 else -1


@nb.njit(cache=True)
def lbfgs_run(acq, x0, lo, hi, eps_opt, max_iters, memory, c1, c2, budget):
    """Projected L-BFGS ascent; returns (x, value, evals, converged)."""
    d = x0.shape[0]
    x = x0.copy()
    g = np.empty(d)
    f = _neg_value_grad(acq, x, g)
    evals = 1
    S = np.empty((memory, d))
    Y = np.empty((memory, d))
    RHO = np.empty(memory)
    k = 0
    free = np.empty(d, dtype=np.bool_)
    free_prev = np.empty(d, dtype=np.bool_)
    has_prev = False
    gf = np.empty(d)
    p = np.empty(d)
    alph = np.empty(memory)
    PA = np.empty(3)
    PX = np.empty((3, d))
    PG = np.empty((3, d))
    PF = np.empty(3)
    PD = np.empty(3)
    stats = np.empty(2)
    s = np.empty(d)
    yv = np.empty(d)
    converged = False
    for _ in range(max_iters):
        changed = False
        for j in range(d):
            free[j] = not ((x[j] <= lo[j] and g[j] > 0) or (x[j] >= hi[j] and g[j] < 0))
            if has_prev and free[j] != free_prev[j]:
                changed = True
        if changed:
            k = 0
        free_prev[:] = free
        has_prev = True
        for j in range(d):
            gf[j] = g[j] if free[j] else 0.0
        gnorm = _norm(gf)
        if gnorm == 0.0:
            converged = True
            break
        if k > 0:
            q = gf.copy()
            for i in range(k - 1, -1, -1):
                t = 0.0
                for j in range(d):
                    t += S[i, j] * q[j]
                alph[i] = RHO[i] * t
                for j in range(d):
                    q[j] -= alph[i] * Y[i, j]
            sy = 0.0
            yy = 0.0
            for j in range(d):
                sy += S[k - 1, j] * Y[k - 1, j]
                yy += Y[k - 1, j] * Y[k - 1, j]
            gamma = sy / yy
            for j in range(d):
                q[j] *= gamma
            for i in range(k):
                b = 0.0
                for j in range(d):
                    b += Y[i, j] * q[j]
                b *= RHO[i]
                for j in range(d):
                    q[j] += (alph[i] - b) * S[i, j]
            for j in range(d):
                p[j] = -q[j]
        else:
            for j in range(d):
                p[j] = -gf[j] / gnorm
        dphi = 0.0
        for j in range(d):
            if not free[j]:
                p[j] = 0.0
            if (x[j] <= lo[j] and p[j] < 0) or (x[j] >= hi[j] and p[j] > 0):
                p[j] = 0.0
            dphi += g[j] * p[j]
        if not dphi < 0:
            k = 0
            for j in range(d):
                p[j] = -gf[j] / gnorm
            dphi = -gnorm
        amax = np.inf
        for j in range(d):
            if p[j] > 0:
                r = (hi[j] - x[j]) / p[j]
            elif p[j] < 0:
                r = (lo[j] - x[j]) / p[j]
            else:
                r = np.inf
            if r < amax:
                amax = r
        if not amax > 0:
            converged = True
            break
        acc = _line_search(acq, x, f, dphi, p, amax, lo, hi, c1, c2, budget,
                           PA, PX, PG, PF, PD, stats)
        evals += int(stats[0])
        if acc < 0:
            converged = stats[1] * _norm(p) <= eps_opt
            break
        sy = 0.0
        yy = 0.0
        ss = 0.0
        for j in range(d):
            s[j] = PX[acc, j] - x[j]
            yv[j] = (PG[acc, j] - g[j]) if free[j] else 0.0
            sy += s[j] * yv[j]
            yy += yv[j] * yv[j]
            ss += s[j] * s[j]
        # yy can underflow to 0 on nearly flat surfaces while sy stays positive
        if yy > 0 and sy > 2.2e-16 * yy:
            if k == memory:
                for i in range(memory - 1):
                    S[i, :] = S[i + 1, :]
                    Y[i, :] = Y[i + 1, :]
                    RHO[i] = RHO[i + 1]
                k -= 1
            S[k, :] = s
            Y[k, :] = yv
            RHO[k] = 1.0 / sy
            k += 1
        x[:] = PX[acc]
        g[:] = PG[acc]
        f = PF[acc]
        # a step cut short by a bound only changes the active set
        if PA[acc] < amax and math.sqrt(ss) <= eps_opt:
            converged = True
            break
    return x, -f, evals, converged
