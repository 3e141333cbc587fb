"""Axis-aligned interval sets (boxes) used for state, input, and disturbance bounds.

Bounds may be infinite; an infinite bound simply means "unconstrained on that
side" and downstream constraint builders skip the corresponding rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoxSet:
    """Interval set {v : lower <= v <= upper}, componentwise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            raise ValueError("BoxSet requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def halfwidth(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    def contains(self, v, tol: float = 0.0) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def violation(self, v) -> np.ndarray:
        """Per-component excess outside the box (0 where inside)."""
        v = np.asarray(v, dtype=float)
        return np.maximum(0.0, np.maximum(self.lower - v, v - self.upper))

    def clip(self, v) -> np.ndarray:
        return np.clip(np.asarray(v, dtype=float), self.lower, self.upper)

    def sample(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        """Uniform samples; bounds must be finite."""
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("cannot sample a box with infinite bounds")
        size = self.dim if n is None else (n, self.dim)
        return rng.uniform(self.lower, self.upper, size=size)

    def vertices(self) -> np.ndarray:
        """All 2^dim corner points, ordered by binary counting over components."""
        d = self.dim
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("cannot enumerate vertices of a box with infinite bounds")
        bits = (np.arange(2**d)[:, None] >> np.arange(d)) & 1
        return np.where(bits, self.upper, self.lower)


def box(lower, upper) -> BoxSet:
    """Shorthand constructor accepting scalars or sequences."""
    return BoxSet(np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))

