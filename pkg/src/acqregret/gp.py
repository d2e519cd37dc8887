"""
Gaussian process regression with analytic posterior gradients.

A fitted :class:`GpModel` is immutable.  Posterior queries go through
triangular solves against the stored Cholesky factor of

    K~ = K(X, X) + (noise^2 + jitter * s^2) I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize

from . import _fastpath
from .exceptions import IllConditionedModelError
from .kernels import Kernel, KernelFamily, _profile

__all__ = [
    "GpModel",
    "make_gp",
    "fit_gp",
    "posterior",
    "posterior_grad",
    "log_marginal_likelihood",
    "HyperparameterFit",
    "LOG_SIGNAL_BOUNDS",
    "LOG_LENGTHSCALE_BOUNDS",
    "LOG_NOISE_BOUNDS",
]

JITTER_START = 1e-10
JITTER_MAX = 1e-4

LOG_SIGNAL_BOUNDS = (-5.0, 5.0)
LOG_LENGTHSCALE_BOUNDS = (-5.0, 5.0)
# noiseless benchmarks need room for a tiny fitted noise: sigma_n in [1e-8, e]
LOG_NOISE_BOUNDS = (math.log(1e-8), 1.0)

# sub-box of the bounds used to draw random restarts
_INIT_SIGNAL = (-1.0, 1.0)
_INIT_LENGTHSCALE = (-3.0, 0.7)
_INIT_NOISE = (-8.0, -2.0)
_LOG_2PI = math.log(2.0 * math.pi)


def _cholesky_with_jitter(K, signal_var):
    """Factor ``K + eps * signal_var * I`` with escalating ``eps``."""
    n = K.shape[0]
    eps = JITTER_START
    while eps <= JITTER_MAX * (1 + 1e-9):
        try:
            L = np.linalg.cholesky(K + (eps * signal_var) * np.eye(n))
            return L, eps
        except np.linalg.LinAlgError:
            eps *= 10.0
    raise IllConditionedModelError(
        f"Cholesky failed for n={n} with jitter up to {JITTER_MAX:g}"
    )


@dataclass(frozen=True, eq=False)
class GpModel:
    """A conditioned zero-mean GP.

    Attributes
    ----------
    kernel : Kernel
    noise : float
        Observation noise standard deviation ``sigma_n``.
    X : ndarray, shape (n, d)
    y : ndarray, shape (n,)
    chol : ndarray, shape (n, n)
        Lower Cholesky factor of the jittered ``K~``.
    alpha : ndarray, shape (n,)
        ``K~^{-1} y``.
    jitter : float
        Relative jitter actually used.
    log_likelihood : float
        Log marginal likelihood of ``y`` under this model.
    """

    kernel: Kernel
    noise: float
    X: np.ndarray
    y: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    log_likelihood: float = field(default=float("nan"))

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def point(self, x, grad=False):
        """Posterior at a single point, optionally with gradients.

        Returns ``(mu, var)`` or ``(mu, var, dmu, dvar)``; ``var`` is
        clamped at zero.
        """
        d = self.X.shape[1]
        dmu = np.empty(d)
        dvar = np.empty(d)
        mu, var = _fastpath.posterior_point(
            x, self.X, self.kernel.inv_ls2, self.kernel.variance, self.alpha,
            self.chol, self.kernel.family_code, grad, dmu, dvar,
        )
        if not grad:
            return mu, var
        return mu, var, dmu, dvar

    def predict(self, Xq, chunk=65536):
        """Posterior mean and clamped variance at the rows of ``Xq``."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        mu = np.empty(Xq.shape[0])
        var = np.empty(Xq.shape[0])
        for start in range(0, Xq.shape[0], chunk):
            block = Xq[start:start + chunk]
            Ks = self.kernel(block, self.X)
            mu[start:start + chunk] = Ks @ self.alpha
            V = solve_triangular(self.chol, Ks.T, lower=True, check_finite=False)
            var[start:start + chunk] = self.kernel.variance - np.einsum(
                "ij,ij->j", V, V
            )
        return mu, np.maximum(var, 0.0)

    def to_text(self) -> str:
        """Serialize to the flat ``key = value`` text schema."""
        lines = [
            f"family = {self.kernel.family.value}",
            f"signal_scale = {self.kernel.signal_scale!r}",
            "lengthscales = " + ", ".join(repr(float(v)) for v in self.kernel.lengthscales),
            f"noise = {self.noise!r}",
            f"jitter = {self.jitter!r}",
            f"n = {self.n}",
            f"d = {self.dim}",
        ]
        for i, row in enumerate(self.X):
            lines.append(f"x_{i} = " + ", ".join(repr(float(v)) for v in row))
        lines.append("y = " + ", ".join(repr(float(v)) for v in self.y))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GpModel":
        kv = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                key, _, value = line.partition("=")
                kv[key.strip()] = value.strip()

        def floats(s):
            return np.array([float(v) for v in s.split(",") if v.strip()])

        n, d = int(kv["n"]), int(kv["d"])
        X = np.array([floats(kv[f"x_{i}"]) for i in range(n)]).reshape(n, d)
        kernel = Kernel(kv["family"], float(kv["signal_scale"]), floats(kv["lengthscales"]))
        return make_gp(X, floats(kv["y"]), kernel, float(kv["noise"]))


def make_gp(X, y, kernel: Kernel, noise: float) -> GpModel:
    """Condition a GP with fixed hyperparameters on ``(X, y)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size or X.shape[0] < 1:
        raise ValueError(f"need matching nonempty X, y; got {X.shape}, {y.shape}")
    if X.shape[1] != kernel.dim:
        raise ValueError(f"X has {X.shape[1]} columns, kernel expects {kernel.dim}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    K = kernel(X, X)
    K[np.diag_indices_from(K)] += noise**2
    L, eps = _cholesky_with_jitter(K, kernel.variance)
    L = np.ascontiguousarray(L)
    z = solve_triangular(L, y, lower=True, check_finite=False)
    alpha = solve_triangular(L, z, lower=True, trans="T", check_finite=False)
    lml = -0.5 * z @ z - np.sum(np.log(np.diag(L))) - 0.5 * y.size * _LOG_2PI
    for arr in (X, y, L, alpha):
        arr.setflags(write=False)
    return GpModel(kernel, float(noise), X, y, L, alpha, eps, float(lml))


def posterior(model: GpModel, x):
    """Posterior mean and variance ``(mu, var)`` at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mu, var = model.point(x)
    return float(mu), float(var)


def posterior_grad(model: GpModel, x):
    """Gradients ``(dmu/dx, dvar/dx)`` of the posterior at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _, _, dmu, dvar = model.point(x, grad=True)
    return dmu, dvar


# ---------------------------------------------------------------------------
# marginal likelihood
# ---------------------------------------------------------------------------


def _unpack(theta, d, fixed_noise):
    log_s = theta[0]
    log_ls = theta[1:1 + d]
    noise = fixed_noise if fixed_noise is not None else math.exp(theta[1 + d])
    return math.exp(log_s), np.exp(log_ls), noise


def _lml_and_grad(theta, D2, y, family, fixed_noise):
    """Negative log marginal likelihood and its gradient in log-space.

    ``D2`` holds the per-axis squared differences, shape (d, n, n).
    """
    d, n, _ = D2.shape
    s, ls, noise = _unpack(theta, d, fixed_noise)
    s2 = s * s
    inv_ls2 = 1.0 / ls**2
    r2 = np.tensordot(inv_ls2, D2, axes=1)
    g, h = _profile(family, r2)
    K = s2 * g
    eye = np.eye(n)
    Kt = K + (noise * noise) * eye
    try:
        L, eps = _cholesky_with_jitter(Kt, s2)
    except IllConditionedModelError:
        return 1e25, np.zeros_like(theta)
    Linv = solve_triangular(L, eye, lower=True, check_finite=False)
    Kinv = Linv.T @ Linv
    alpha = Kinv @ y
    lml = -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * _LOG_2PI
    W = np.outer(alpha, alpha) - Kinv
    grad = np.empty_like(theta)
    # the jitter term scales with s^2 as well
    grad[0] = np.sum(W * K) + eps * s2 * np.trace(W)
    grad[1:1 + d] = -0.5 * s2 * inv_ls2 * np.tensordot(D2, W * h, axes=([1, 2], [0, 1]))
    if fixed_noise is None:
        grad[1 + d] = np.trace(W) * noise * noise
    return -lml, -grad


def log_marginal_likelihood(X, y, kernel: Kernel, noise: float) -> float:
    """``-y^T K~^{-1} y / 2 - log|K~| / 2 - n log(2 pi) / 2``."""
    return make_gp(X, y, kernel, noise).log_likelihood


@dataclass(frozen=True)
class HyperparameterFit:
    """Outcome of one likelihood-maximization start."""

    theta0: np.ndarray
    theta: np.ndarray
    lml0: float
    lml: float


def _bounds(d, fit_noise):
    b = [LOG_SIGNAL_BOUNDS] + [LOG_LENGTHSCALE_BOUNDS] * d
    if fit_noise:
        b.append(LOG_NOISE_BOUNDS)
    return b


def _initial_theta(d, fit_noise, seed, index):
    if index == 0:
        theta = [0.0] + [math.log(0.5)] * d
        if fit_noise:
            theta.append(math.log(1e-2))
        return np.array(theta)
    rng = np.random.default_rng((seed, index))
    theta = [rng.uniform(*_INIT_SIGNAL)]
    theta.extend(rng.uniform(*_INIT_LENGTHSCALE, size=d))
    if fit_noise:
        theta.append(rng.uniform(*_INIT_NOISE))
    return np.array(theta)


def optimize_hyperparameters(X, y, kernel_family="matern52", noise=None,
                             seed=0, n_restarts=8):
    """Multi-started quasi-Newton maximization of the log marginal likelihood.

    Returns the list of per-start :class:`HyperparameterFit` records; the
    first start is a fixed default, the rest are drawn from ``(seed, i)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    family = KernelFamily.parse(kernel_family)
    d = X.shape[1]
    fit_noise = noise is None
    bounds = _bounds(d, fit_noise)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    D2 = np.moveaxis((X[:, None, :] - X[None, :, :]) ** 2, -1, 0).copy()
    fits = []
    for i in range(max(1, int(n_restarts))):
        theta0 = np.clip(_initial_theta(d, fit_noise, seed, i), lo, hi)
        f0, _ = _lml_and_grad(theta0, D2, y, family, noise)
        res = minimize(
            _lml_and_grad, theta0, args=(D2, y, family, noise), jac=True,
            method="L-BFGS-B", bounds=bounds, options={"maxiter": 200},
        )
        theta = np.clip(res.x, lo, hi)
        f1 = float(res.fun)
        if not np.isfinite(f1) or f1 > f0:
            theta, f1 = theta0, f0
        fits.append(HyperparameterFit(theta0, theta, -float(f0), -f1))
    return fits


def fit_gp(X, y, kernel_family="matern52", noise=None, seed=0, n_restarts=8):
    """Fit hyperparameters by marginal likelihood and condition the GP.

    Parameters
    ----------
    X : array_like, shape (n, d)
    y : array_like, shape (n,)
    kernel_family : str or KernelFamily
    noise : float or None
        Fixed observation noise ``sigma_n``; ``None`` fits it.
    seed : int
        Seeds the random restarts.
    n_restarts : int
        Number of quasi-Newton starts; the best likelihood wins.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] < 1 or X.shape[0] != y.size:
        raise ValueError(f"need matching nonempty X, y; got {X.shape}, {y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")
    fits = optimize_hyperparameters(X, y, kernel_family, noise, seed, n_restarts)
    best = max(fits, key=lambda f: f.lml)
    d = X.shape[1]
    s, ls, sigma_n = _unpack(best.theta, d, noise)
    return make_gp(X, y, Kernel(kernel_family, s, ls), sigma_n)
