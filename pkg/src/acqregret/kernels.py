"""
Stationary covariance functions with analytic input derivatives.

All kernels are functions of the scaled distance

    d(x1, x2)^2 = sum_j (x1_j - x2_j)^2 / l_j^2

so that ``k(x1, x2) = s^2 g(d)``.  Input gradients are written as

    dk(x1, x2)/dx1 = s^2 h(d) (x1 - x2) / l^2,   h(d) = g'(d) / d,

and ``h`` is finite at ``d = 0`` for every family implemented here, which
makes the gradient at coincident points exactly the zero vector.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _fastpath
from .exceptions import InvalidKernelError

__all__ = ["KernelFamily", "Kernel", "kernel_eval", "kernel_grad_x1"]

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


class KernelFamily(str, enum.Enum):
    SE = "se"
    MATERN52 = "matern52"
    MATERN32 = "matern32"

    @classmethod
    def parse(cls, value) -> "KernelFamily":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace(" ", "")
        aliases = {
            "se": cls.SE,
            "squaredexponential": cls.SE,
            "rbf": cls.SE,
            "matern52": cls.MATERN52,
            "matern5/2": cls.MATERN52,
            "matern32": cls.MATERN32,
            "matern3/2": cls.MATERN32,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidKernelError(f"unknown kernel family {value!r}") from None


_FAMILY_CODES = {
    KernelFamily.SE: _fastpath.FAMILY_SE,
    KernelFamily.MATERN52: _fastpath.FAMILY_MATERN52,
    KernelFamily.MATERN32: _fastpath.FAMILY_MATERN32,
}


def _profile(family: KernelFamily, r2: np.ndarray):
    """Return ``(g(d), h(d))`` for squared scaled distances ``r2``."""
    if family is KernelFamily.SE:
        g = np.exp(-0.5 * r2)
        return g, -g
    r = np.sqrt(r2)
    if family is KernelFamily.MATERN52:
        sr = _SQRT5 * r
        e = np.exp(-sr)
        return (1.0 + sr + (5.0 / 3.0) * r2) * e, -(5.0 / 3.0) * (1.0 + sr) * e
    sr = _SQRT3 * r
    e = np.exp(-sr)
    return (1.0 + sr) * e, -3.0 * e


@dataclass(frozen=True, eq=False)
class Kernel:
    """Stationary kernel ``s^2 g(d)`` with per-axis lengthscales.

    Parameters
    ----------
    family : KernelFamily or str
        ``"se"``, ``"matern52"`` or ``"matern32"``.
    signal_scale : float
        Signal scale ``s``; ``k(x, x) = s^2``.
    lengthscales : array_like
        One positive lengthscale per input dimension.
    """

    family: KernelFamily
    signal_scale: float
    lengthscales: np.ndarray

    def __post_init__(self):
        family = KernelFamily.parse(self.family)
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float)).copy()
        s = float(self.signal_scale)
        if not (math.isfinite(s) and s > 0.0):
            raise InvalidKernelError(f"signal scale must be positive, got {s}")
        if ls.ndim != 1 or not np.all(np.isfinite(ls)) or np.any(ls <= 0.0):
            raise InvalidKernelError(f"lengthscales must be positive, got {ls}")
        ls.setflags(write=False)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "signal_scale", s)
        object.__setattr__(self, "lengthscales", ls)
        inv_ls2 = 1.0 / ls**2
        inv_ls2.setflags(write=False)
        object.__setattr__(self, "inv_ls2", inv_ls2)
        object.__setattr__(self, "family_code", _FAMILY_CODES[family])

    @property
    def dim(self) -> int:
        return self.lengthscales.size

    @property
    def variance(self) -> float:
        return self.signal_scale**2

    def sq_dist(self, X1, X2) -> np.ndarray:
        """Matrix of squared scaled distances between rows of X1 and X2."""
        X1 = np.atleast_2d(X1) / self.lengthscales
        X2 = np.atleast_2d(X2) / self.lengthscales
        diff = X1[:, None, :] - X2[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)

    def __call__(self, X1, X2) -> np.ndarray:
        """Covariance matrix ``K(X1, X2)``."""
        g, _ = _profile(self.family, self.sq_dist(X1, X2))
        return self.variance * g

    def cross(self, x, X):
        """Covariances and input gradients between one point and many.

        Returns
        -------
        k : ndarray, shape (n,)
            ``k(x, X_i)``.
        dk : ndarray, shape (n, d)
            Row ``i`` is ``dk(x, X_i)/dx``.
        """
        diff = x - X
        w = diff * self.inv_ls2
        r2 = np.einsum("ij,ij->i", diff, w)
        g, h = _profile(self.family, r2)
        s2 = self.variance
        return s2 * g, (s2 * h)[:, None] * w

    def grad_x1(self, x, X) -> np.ndarray:
        """Gradients ``dk(x, X_i)/dx`` stacked as rows, shape (n, d)."""
        x = np.asarray(x, dtype=float)
        return self.cross(x, np.atleast_2d(np.asarray(X, dtype=float)))[1]

    def grad_log_lengthscales(self, X) -> np.ndarray:
        """Derivatives of ``K(X, X)`` with respect to each ``log l_j``.

        Returns an array of shape (d, n, n).
        """
        X = np.atleast_2d(X)
        diff = X[:, None, :] - X[None, :, :]
        sq = diff**2 * self.inv_ls2
        _, h = _profile(self.family, np.sum(sq, axis=-1))
        return -self.variance * h[None, :, :] * np.moveaxis(sq, -1, 0)


def kernel_eval(k: Kernel, x1, x2) -> float:
    """Kernel value ``k(x1, x2)`` for two points."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != x2.shape or x1.size != k.dim:
        raise ValueError(f"dimension mismatch: {x1.shape}, {x2.shape}, d={k.dim}")
    return float(k.cross(x1, x2[None, :])[0][0])


def kernel_grad_x1(k: Kernel, x1, x2) -> np.ndarray:
    """Gradient of ``k(x1, x2)`` with respect to ``x1``."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != x2.shape or x1.size != k.dim:
        raise ValueError(f"dimension mismatch: {x1.shape}, {x2.shape}, d={k.dim}")
    return k.cross(x1, x2[None, :])[1][0]
