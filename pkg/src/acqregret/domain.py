"""Axis-aligned box domains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

__all__ = ["Domain"]


@dataclass(frozen=True, eq=False)
class Domain:
    """Box ``[lower, upper]`` in R^d."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DomainError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainError("bounds must be finite")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, dim: int) -> "Domain":
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def from_bounds(cls, bounds) -> "Domain":
        """Build from a sequence of ``(low, high)`` pairs."""
        b = np.asarray(bounds, dtype=float)
        return cls(b[:, 0], b[:, 1])

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    @property
    def degenerate(self) -> bool:
        return bool(np.any(self.widths <= 0.0))

    def contains(self, x, tol=0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(((x >= self.lower - tol) & (x <= self.upper + tol)).all())

    def clip(self, x) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def to_unit(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.widths

    def from_unit(self, u) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.widths

    def sample(self, rng, n=None) -> np.ndarray:
        """Uniform draws; one point if ``n`` is None, else an (n, d) array."""
        size = self.dim if n is None else (n, self.dim)
        return self.lower + rng.random(size) * self.widths

    def __repr__(self):
        pairs = ", ".join(f"[{a:g}, {b:g}]" for a, b in zip(self.lower, self.upper))
        return f"Domain({pairs})"
