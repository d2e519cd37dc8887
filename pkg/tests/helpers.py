"""Shared builders and oracles for the test suite."""

import numpy as np

from acqregret.gp import make_gp
from acqregret.kernels import Kernel


def random_model(rng, n=None, d=None, family="matern52", noise=None):
    n = int(rng.integers(3, 16)) if n is None else n
    d = int(rng.integers(1, 7)) if d is None else d
    X = rng.random((n, d))
    y = np.sin(3 * X @ rng.normal(size=d)) + 0.1 * rng.normal(size=n)
    kernel = Kernel(family, float(np.exp(rng.uniform(-0.5, 0.5))),
                    np.exp(rng.uniform(np.log(0.15), np.log(1.0), size=d)))
    noise = float(np.exp(rng.uniform(np.log(1e-3), np.log(1e-1)))) if noise is None else noise
    return make_gp(X, y, kernel, noise)


def central_diff(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(analytic, numeric):
    analytic = np.asarray(analytic, dtype=float)
    return float(np.linalg.norm(analytic - numeric) / max(1.0, np.linalg.norm(analytic)))


def dense_posterior(model, x):
    """Posterior from an explicit inverse of the noisy kernel matrix."""
    K = model.kernel(model.X, model.X) + (model.noise**2) * np.eye(model.n)
    K += model.jitter * model.kernel.variance * np.eye(model.n)
    Kinv = np.linalg.inv(K)
    k = model.kernel(np.atleast_2d(x), model.X)[0]
    return float(k @ Kinv @ model.y), float(model.kernel.variance - k @ Kinv @ k)


class Quadratic:
    """Handle for ``-||x - c||^2`` with an exact gradient."""

    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)
        self.n_evals = 0

    def value(self, x):
        self.n_evals += 1
        return -float(np.sum((x - self.c) ** 2))

    def value_and_grad(self, x):
        self.n_evals += 1
        r = x - self.c
        return -float(r @ r), -2.0 * r

    __call__ = value


class Bimodal:
    """Two Gaussian bumps on the unit interval: heights 1.0 at 0.75 and 0.7 at 0.2."""

    def __init__(self):
        self.n_evals = 0

    def _parts(self, x):
        a = np.exp(-((x[0] - 0.75) ** 2) / (2 * 0.08**2))
        b = 0.7 * np.exp(-((x[0] - 0.2) ** 2) / (2 * 0.1**2))
        return a, b

    def value(self, x):
        self.n_evals += 1
        a, b = self._parts(x)
        return float(a + b)

    def value_and_grad(self, x):
        self.n_evals += 1
        a, b = self._parts(x)
        g = -a * (x[0] - 0.75) / 0.08**2 - b * (x[0] - 0.2) / 0.1**2
        return float(a + b), np.array([g])

    __call__ = value


ACCEPTANCE = []


def record_criterion(number, name, passed, detail):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return passed
