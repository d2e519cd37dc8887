"""
PI, EI and GP-UCB acquisitions over a fitted GP, oriented for maximization.

With ``z(x) = (f_best - mu(x)) / sigma(x)`` (``f_best`` the minimum observed
target)::

    PI(x)  = Phi(z)
    EI(x)  = (f_best - mu) Phi(z) + sigma phi(z)
    UCB(x) = -mu + alpha sigma

PI and EI are defined as zero wherever ``sigma(x) <= sigma_n``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import _fastpath
from .exceptions import ConfigError
from .gp import GpModel

__all__ = [
    "AcquisitionKind",
    "AcquisitionSpec",
    "Acquisition",
    "ZScore",
    "z_score",
    "acq_value",
    "acq_grad",
    "ei_grad_four_term",
    "acq_from_moments",
]

DEFAULT_UCB_ALPHA = 2.0


class AcquisitionKind(str, enum.Enum):
    PI = "pi"
    EI = "ei"
    UCB = "ucb"

    @classmethod
    def parse(cls, value) -> "AcquisitionKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown acquisition {value!r}; use pi, ei or ucb") from None


_KIND_CODES = {
    AcquisitionKind.PI: _fastpath.KIND_PI,
    AcquisitionKind.EI: _fastpath.KIND_EI,
    AcquisitionKind.UCB: _fastpath.KIND_UCB,
}


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which acquisition to use and its reference values.

    ``incumbent`` is required for PI and EI and should be ``min(y)``;
    ``alpha`` only matters for UCB.
    """

    kind: AcquisitionKind
    incumbent: float | None = None
    alpha: float = DEFAULT_UCB_ALPHA

    def __post_init__(self):
        kind = AcquisitionKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is not AcquisitionKind.UCB:
            if self.incumbent is None or not math.isfinite(self.incumbent):
                raise ConfigError(f"{kind.value} needs a finite incumbent")
            object.__setattr__(self, "incumbent", float(self.incumbent))
        if not (self.alpha > 0):
            raise ConfigError(f"UCB alpha must be positive, got {self.alpha}")

    @classmethod
    def for_targets(cls, kind, y, alpha=DEFAULT_UCB_ALPHA) -> "AcquisitionSpec":
        """Spec whose incumbent is the minimum of the observed targets."""
        return cls(kind, float(np.min(y)), alpha)


@dataclass(frozen=True)
class ZScore:
    z: float
    active: bool


def z_score(spec: AcquisitionSpec, model: GpModel, x) -> ZScore:
    mu, var = model.point(np.asarray(x, dtype=float))
    sigma = math.sqrt(var)
    if not sigma > model.noise:
        return ZScore(0.0, False)
    return ZScore((spec.incumbent - mu) / sigma, True)


class Acquisition:
    """Acquisition handle bound to one model snapshot.

    This is the object the optimizers talk to: :meth:`value` and
    :meth:`value_and_grad` evaluate one point, :meth:`values` a batch.
    Evaluations are counted in :attr:`n_evals`.
    """

    def __init__(self, spec: AcquisitionSpec, model: GpModel):
        self.spec = spec
        self.model = model
        self.dim = model.dim
        self.n_evals = 0
        incumbent = spec.incumbent if spec.incumbent is not None else 0.0
        self._args = (
            model.X, model.kernel.inv_ls2, model.kernel.variance, model.alpha,
            model.chol, model.kernel.family_code, incumbent, spec.alpha, model.noise,
        )
        self._code = _KIND_CODES[spec.kind]
        self._scratch = np.empty(self.dim)

    @property
    def fast_args(self) -> tuple:
        """Argument tuple for the compiled optimizers."""
        return (self._code,) + self._args

    def value(self, x) -> float:
        self.n_evals += 1
        return _fastpath.acquisition_point(
            self._code, x, *self._args, False, self._scratch
        )

    def value_and_grad(self, x):
        self.n_evals += 1
        grad = np.empty(self.dim)
        v = _fastpath.acquisition_point(self._code, x, *self._args, True, grad)
        return v, grad

    def __call__(self, x) -> float:
        return self.value(x)

    def value_rows(self, P) -> np.ndarray:
        """Point-by-point values at the rows of ``P``; counts one eval per row."""
        P = np.ascontiguousarray(P, dtype=float)
        out = np.empty(P.shape[0])
        _fastpath.acquisition_rows(self._code, P, *self._args, out)
        self.n_evals += P.shape[0]
        return out

    def values(self, Xq) -> np.ndarray:
        """Vectorized acquisition values at the rows of ``Xq``."""
        mu, var = self.model.predict(Xq)
        sigma = np.sqrt(var)
        spec = self.spec
        if spec.kind is AcquisitionKind.UCB:
            return -mu + spec.alpha * sigma
        active = sigma > self.model.noise
        safe = np.where(active, sigma, 1.0)
        z = np.where(active, (spec.incumbent - mu) / safe, 0.0)
        if spec.kind is AcquisitionKind.PI:
            return np.where(active, ndtr(z), 0.0)
        ei = (spec.incumbent - mu) * ndtr(z) + sigma * np.exp(-0.5 * z**2) / math.sqrt(2 * math.pi)
        return np.where(active & (z >= _fastpath.EI_Z_FLOOR), ei, 0.0)


def acq_from_moments(kind, mu: float, sigma: float, incumbent: float = 0.0,
                     alpha: float = DEFAULT_UCB_ALPHA, sigma_n: float = 0.0) -> float:
    """Acquisition value from posterior moments, in plain Python."""
    kind = AcquisitionKind.parse(kind)
    if kind is AcquisitionKind.UCB:
        return -mu + alpha * sigma
    if not sigma > sigma_n:
        return 0.0
    z = (incumbent - mu) / sigma
    cdf = 0.5 * math.erfc(-z / math.sqrt(2.0))
    if kind is AcquisitionKind.PI:
        return cdf
    if z < _fastpath.EI_Z_FLOOR:
        return 0.0
    return (incumbent - mu) * cdf + sigma * math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def acq_value(spec: AcquisitionSpec, model: GpModel, x) -> float:
    """Acquisition value at a single point."""
    return float(Acquisition(spec, model).value(np.atleast_1d(np.asarray(x, dtype=float))))


def acq_grad(spec: AcquisitionSpec, model: GpModel, x) -> np.ndarray:
    """Analytic acquisition gradient at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return Acquisition(spec, model).value_and_grad(x)[1]


def ei_grad_four_term(spec: AcquisitionSpec, model: GpModel, x) -> np.ndarray:
    """EI gradient assembled term by term from its unsimplified expansion.

    ``(f_best - mu) phi(z) dz - Phi(z) dmu + sigma phi'(z) dz + phi(z) dsigma``
    with ``phi'(z) = -z phi(z)``.  Only used to cross-check :func:`acq_grad`.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mu, var, dmu, dvar = model.point(x, grad=True)
    sigma = math.sqrt(var)
    if not sigma > model.noise:
        return np.zeros_like(x)
    z = (spec.incumbent - mu) / sigma
    if z < _fastpath.EI_Z_FLOOR:
        return np.zeros_like(x)
    dsigma = dvar / (2.0 * sigma)
    dz = -dmu / sigma - (spec.incumbent - mu) / var * dsigma
    pdf = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    cdf = 0.5 * math.erfc(-z / math.sqrt(2.0))
    return (
        (spec.incumbent - mu) * pdf * dz
        - cdf * dmu
        + sigma * (-z * pdf) * dz
        + pdf * dsigma
    )
