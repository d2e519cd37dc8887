"""
Benchmark objectives (all minimized) with their standard boxes.

=============  =====  ===========================  ==============================
name           dim    box                          global minimum
=============  =====  ===========================  ==============================
beale          2      [-4.5, 4.5]^2                0 at (3, 0.5)
branin         2      [-5, 10] x [0, 15]           0.397887 at (-pi, 12.275),
                                                   (pi, 2.275), (9.42478, 2.475)
cosines        2, 8   [0, 1]^d                     -0.3 d at x_i = 0.3125
hartmann6d     6      [0, 1]^6                     -3.32237
holdertable    2      [-10, 10]^2                  -19.2085 at (+-8.05502, +-9.66459)
rosenbrock     d      [-2.048, 2.048]^d            0 at (1, ..., 1)
sixhumpcamel   2      [-3, 3] x [-2, 2]            -1.031628 at +-(0.0898, -0.7126)
sphere         d      [-5.12, 5.12]^d              0 at the origin
=============  =====  ===========================  ==============================

Cosines is the separable cosine mixture

    f(x) = sum_i (u_i^2 - 0.3 cos(3 pi u_i)),   u_i = 1.6 x_i - 0.5,

whose unique minimizer is ``u = 0``.  Every ``evaluate`` accepts a single
point or an (m, d) array of points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import Domain
from .exceptions import DomainError, RegistryError

__all__ = ["Benchmark", "get_benchmark", "list_benchmarks", "observe", "BENCHMARK_NAMES"]


@dataclass(frozen=True, eq=False)
class Benchmark:
    name: str
    dim: int
    domain: Domain
    fun: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    f_min: float
    x_min: tuple = ()
    formula: str = ""
    source: str = ""

    def evaluate(self, x):
        """Objective value(s); scalar for a point, array for rows."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(self.fun(x[None, :])[0])
        return self.fun(x)

    __call__ = evaluate

    def describe(self) -> str:
        box = " x ".join(f"[{a:g}, {b:g}]" for a, b in zip(self.domain.lower, self.domain.upper))
        return (
            f"{self.name} (d={self.dim})\n  f(x) = {self.formula}\n  box: {box}\n"
            f"  f_min = {self.f_min:.10g}\n  source: {self.source}"
        )


def _beale(X):
    x, y = X[:, 0], X[:, 1]
    return (1.5 - x + x * y) ** 2 + (2.25 - x + x * y**2) ** 2 + (2.625 - x + x * y**3) ** 2


def _branin(X):
    x, y = X[:, 0], X[:, 1]
    b = 5.1 / (4 * math.pi**2)
    c = 5.0 / math.pi
    t = 1.0 / (8 * math.pi)
    return (y - b * x**2 + c * x - 6.0) ** 2 + 10.0 * (1 - t) * np.cos(x) + 10.0


def _cosines(X):
    u = 1.6 * X - 0.5
    return np.sum(u**2 - 0.3 * np.cos(3 * math.pi * u), axis=1)


_H6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H6_A = np.array([
    [10, 3, 17, 3.5, 1.7, 8],
    [0.05, 10, 17, 0.1, 8, 14],
    [3, 3.5, 1.7, 10, 17, 8],
    [17, 8, 0.05, 10, 0.1, 14],
])
_H6_P = 1e-4 * np.array([
    [1312, 1696, 5569, 124, 8283, 5886],
    [2329, 4135, 8307, 3736, 1004, 9991],
    [2348, 1451, 3522, 2883, 3047, 6650],
    [4047, 8828, 8732, 5743, 1091, 381],
])


def _hartmann6(X):
    inner = np.sum(_H6_A[None, :, :] * (X[:, None, :] - _H6_P[None, :, :]) ** 2, axis=2)
    return -np.exp(-inner) @ _H6_ALPHA


def _holdertable(X):
    x, y = X[:, 0], X[:, 1]
    return -np.abs(np.sin(x) * np.cos(y) * np.exp(np.abs(1 - np.sqrt(x**2 + y**2) / math.pi)))


def _rosenbrock(X):
    return np.sum(100.0 * (X[:, 1:] - X[:, :-1] ** 2) ** 2 + (1 - X[:, :-1]) ** 2, axis=1)


def _sixhumpcamel(X):
    x, y = X[:, 0], X[:, 1]
    return (4 - 2.1 * x**2 + x**4 / 3) * x**2 + x * y + (-4 + 4 * y**2) * y**2


def _sphere(X):
    return np.sum(X**2, axis=1)


_BRANIN_MIN = 5.0 / (4.0 * math.pi)
_SIXHUMP = (0.08984201368301331, -0.7126564032704135)
_HOLDER = (8.055023472141116, 9.664590028909654)
_H6_XMIN = (0.20168951265373836, 0.15001069271431358, 0.4768739727643224,
            0.27533243052495035, 0.3116516166944406, 0.6573005340938038)


def _make(name, dim):
    if name == "beale":
        return Benchmark(
            name, 2, Domain([-4.5, -4.5], [4.5, 4.5]), _beale, 0.0, ((3.0, 0.5),),
            "(1.5 - x + xy)^2 + (2.25 - x + xy^2)^2 + (2.625 - x + xy^3)^2",
            "Beale (1958); box as in the Virtual Library of Simulation Experiments",
        )
    if name == "branin":
        return Benchmark(
            name, 2, Domain([-5.0, 0.0], [10.0, 15.0]), _branin, _BRANIN_MIN,
            ((-math.pi, 12.275), (math.pi, 2.275), (3 * math.pi, 2.475)),
            "(y - 5.1 x^2/(4 pi^2) + 5 x/pi - 6)^2 + 10 (1 - 1/(8 pi)) cos x + 10",
            "Branin (1972), standard rescaled form",
        )
    if name == "cosines":
        d = 2 if dim is None else int(dim)
        if d not in (2, 8):
            raise RegistryError(f"cosines is registered for dim 2 or 8, got {d}")
        return Benchmark(
            f"cosines{d}" if d != 2 else "cosines", d, Domain.unit(d), _cosines, -0.3 * d,
            (tuple([0.3125] * d),),
            "sum_i (u_i^2 - 0.3 cos(3 pi u_i)),  u_i = 1.6 x_i - 0.5",
            "separable cosine mixture on the unit cube (choice documented in this module)",
        )
    if name == "hartmann6d":
        return Benchmark(
            name, 6, Domain.unit(6), _hartmann6, -3.3223680114155147, (_H6_XMIN,),
            "-sum_i alpha_i exp(-sum_j A_ij (x_j - P_ij)^2)",
            "Hartmann (1973), six-dimensional variant",
        )
    if name == "holdertable":
        xs = [(sx * _HOLDER[0], sy * _HOLDER[1]) for sx in (1, -1) for sy in (1, -1)]
        return Benchmark(
            name, 2, Domain([-10.0, -10.0], [10.0, 10.0]), _holdertable,
            -19.208502567886743, tuple(xs),
            "-|sin x cos y exp(|1 - sqrt(x^2 + y^2)/pi|)|",
            "Holder table function (Mishra 2006)",
        )
    if name == "rosenbrock":
        d = 2 if dim is None else int(dim)
        if d < 2:
            raise RegistryError("rosenbrock needs dim >= 2")
        return Benchmark(
            name, d, Domain(np.full(d, -2.048), np.full(d, 2.048)), _rosenbrock, 0.0,
            (tuple([1.0] * d),),
            "sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2",
            "Rosenbrock (1960)",
        )
    if name == "sixhumpcamel":
        return Benchmark(
            name, 2, Domain([-3.0, -2.0], [3.0, 2.0]), _sixhumpcamel, -1.0316284534898774,
            (_SIXHUMP, (-_SIXHUMP[0], -_SIXHUMP[1])),
            "(4 - 2.1 x^2 + x^4/3) x^2 + x y + (-4 + 4 y^2) y^2",
            "Dixon and Szego (1978)",
        )
    if name == "sphere":
        d = 2 if dim is None else int(dim)
        if d < 1:
            raise RegistryError("sphere needs dim >= 1")
        return Benchmark(
            name, d, Domain(np.full(d, -5.12), np.full(d, 5.12)), _sphere, 0.0,
            (tuple([0.0] * d),), "sum_i x_i^2", "De Jong sphere",
        )
    raise RegistryError(f"unknown benchmark {name!r}; known: {', '.join(BENCHMARK_NAMES)}")


BENCHMARK_NAMES = (
    "beale", "branin", "cosines", "cosines8", "hartmann6d",
    "holdertable", "rosenbrock", "sixhumpcamel", "sphere",
)


def get_benchmark(name: str, dim: int | None = None) -> Benchmark:
    """Look up a benchmark by name.

    ``cosines8`` is shorthand for ``cosines`` with ``dim=8``; ``dim`` is also
    honored for ``sphere`` and ``rosenbrock`` (default 2).
    """
    key = str(name).strip().lower().replace("_", "").replace("-", "")
    if key in ("cosines2", "cosines8"):
        if dim is not None and int(dim) != int(key[-1]):
            raise RegistryError(f"{name} conflicts with dim={dim}")
        key, dim = "cosines", int(key[-1])
    return _make(key, dim)


def list_benchmarks():
    """The nine registered benchmarks at their default dimensions."""
    return [get_benchmark(n) for n in BENCHMARK_NAMES]


def observe(bench: Benchmark, x, sigma_n: float, rng) -> float:
    """Noisy observation ``f(x) + sigma_n * N(0, 1)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not bench.domain.contains(x):
        raise DomainError(f"{x} is outside the {bench.name} box {bench.domain}")
    value = bench.evaluate(x)
    if sigma_n > 0:
        value += sigma_n * rng.standard_normal()
    return float(value)
