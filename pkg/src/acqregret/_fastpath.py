"""Compiled single-point posterior and acquisition evaluation.

DIRECT and the quasi-Newton searches call the acquisition one point at a
time, tens of thousands of times per round, so the per-call cost is
dominated by interpreter overhead unless the whole chain is compiled.
The batched numpy paths in :mod:`acqregret.gp` and
:mod:`acqregret.acquisition` compute the same quantities independently.
"""

import math

import numba as nb
import numpy as np

FAMILY_SE = 0
FAMILY_MATERN52 = 1
FAMILY_MATERN32 = 2

KIND_PI = 0
KIND_EI = 1
KIND_UCB = 2

EI_Z_FLOOR = -30.0

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@nb.njit(cache=True)
def norm_cdf(z):
    return 0.5 * math.erfc(-z / _SQRT2)


@nb.njit(cache=True)
def norm_pdf(z):
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


@nb.njit(cache=True)
def posterior_point(x, X, inv_ls2, s2, alpha, L, family, want_grad, dmu, dvar):
    """Posterior mean and clamped variance at ``x``.

    When ``want_grad`` is set, ``dmu`` and ``dvar`` are filled in place.
    """
    n, d = X.shape
    k = np.empty(n)
    h = np.empty(n)
    for i in range(n):
        r2 = 0.0
        for j in range(d):
            t = x[j] - X[i, j]
            r2 += t * t * inv_ls2[j]
        if family == FAMILY_SE:
            g = math.exp(-0.5 * r2)
            k[i] = s2 * g
            h[i] = -s2 * g
        elif family == FAMILY_MATERN52:
            sr = _SQRT5 * math.sqrt(r2)
            e = math.exp(-sr)
            k[i] = s2 * (1.0 + sr + (5.0 / 3.0) * r2) * e
            h[i] = -s2 * (5.0 / 3.0) * (1.0 + sr) * e
        else:
            sr = _SQRT3 * math.sqrt(r2)
            e = math.exp(-sr)
            k[i] = s2 * (1.0 + sr) * e
            h[i] = -s2 * 3.0 * e

    mu = 0.0
    for i in range(n):
        mu += k[i] * alpha[i]

    # forward substitution: v = L^{-1} k
    v = np.empty(n)
    vv = 0.0
    for i in range(n):
        acc = k[i]
        for j in range(i):
            acc -= L[i, j] * v[j]
        v[i] = acc / L[i, i]
        vv += v[i] * v[i]
    var = s2 - vv
    if var < 0.0:
        var = 0.0

    if want_grad:
        # back substitution: u = L^{-T} v = K~^{-1} k
        u = np.empty(n)
        for i in range(n - 1, -1, -1):
            acc = v[i]
            for j in range(i + 1, n):
                acc -= L[j, i] * u[j]
            u[i] = acc / L[i, i]
        for j in range(d):
            dmu[j] = 0.0
            dvar[j] = 0.0
        for i in range(n):
            a = h[i] * alpha[i]
            b = h[i] * u[i]
            for j in range(d):
                w = (x[j] - X[i, j]) * inv_ls2[j]
                dmu[j] += a * w
                dvar[j] += b * w
        for j in range(d):
            dvar[j] *= -2.0
    return mu, var


@nb.njit(cache=True)
def acquisition_point(kind, x, X, inv_ls2, s2, alpha, L, family,
                      incumbent, ucb_alpha, sigma_n, want_grad, grad):
    """Acquisition value at ``x`` (maximization orientation).

    When ``want_grad`` is set, ``grad`` is filled in place.
    """
    d = x.shape[0]
    dmu = np.empty(d)
    dvar = np.empty(d)
    mu, var = posterior_point(x, X, inv_ls2, s2, alpha, L, family,
                              want_grad, dmu, dvar)
    sigma = math.sqrt(var)

    if kind == KIND_UCB:
        value = -mu + ucb_alpha * sigma
        if want_grad:
            for j in range(d):
                dsig = dvar[j] / (2.0 * sigma) if sigma > 0.0 else 0.0
                grad[j] = -dmu[j] + ucb_alpha * dsig
        return value

    if not sigma > sigma_n:
        if want_grad:
            for j in range(d):
                grad[j] = 0.0
        return 0.0

    z = (incumbent - mu) / sigma
    if kind == KIND_PI:
        value = norm_cdf(z)
        if want_grad:
            pdf = norm_pdf(z)
            for j in range(d):
                dsig = dvar[j] / (2.0 * sigma)
                grad[j] = pdf * (-dmu[j] - z * dsig) / sigma
        return value

    if z < EI_Z_FLOOR:
        if want_grad:
            for j in range(d):
                grad[j] = 0.0
        return 0.0
    cdf = norm_cdf(z)
    pdf = norm_pdf(z)
    value = (incumbent - mu) * cdf + sigma * pdf
    if want_grad:
        for j in range(d):
            dsig = dvar[j] / (2.0 * sigma)
            grad[j] = -cdf * dmu[j] + pdf * dsig
    return value


@nb.njit(cache=True)
def acquisition_rows(kind, P, X, inv_ls2, s2, alpha, L, family,
                     incumbent, ucb_alpha, sigma_n, out):
    """``acquisition_point`` at every row of ``P``, written to ``out``."""
    scratch = np.empty(P.shape[1])
    for i in range(P.shape[0]):
        out[i] = acquisition_point(kind, P[i], X, inv_ls2, s2, alpha, L, family,
                                   incumbent, ucb_alpha, sigma_n, False, scratch)
