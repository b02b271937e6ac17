"""Finitely supported laws on the real line."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DiscreteLaw1D", "as_law"]


@dataclass(frozen=True, eq=False)
class DiscreteLaw1D:
    """Sorted, merged atoms with positive probabilities summing to 1."""

    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        a = np.array(self.atoms, dtype=float).ravel()
        p = np.array(self.probs, dtype=float).ravel()
        if a.size == 0:
            raise ValueError("law needs at least one atom")
        if a.shape != p.shape:
            raise ValueError("atoms and probs differ in length")
        if np.any(p < 0) or not np.all(np.isfinite(a)):
            raise ValueError("probs must be nonnegative and atoms finite")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probs sum to {p.sum()!r}, not 1")
        keep = p > 0
        a, p = a[keep], p[keep]
        order = np.argsort(a, kind="stable")
        a, p = a[order], p[order]
        uniq, inv = np.unique(a, return_inverse=True)
        merged = np.bincount(inv, weights=p)
        for arr in (uniq, merged):
            arr.setflags(write=False)
        object.__setattr__(self, "atoms", uniq)
        object.__setattr__(self, "probs", merged)

    @classmethod
    def from_sample(cls, sample) -> "DiscreteLaw1D":
        x = np.asarray(sample, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("empty sample")
        return cls(x, np.full(x.size, 1.0 / x.size))

    @classmethod
    def point_mass(cls, c: float) -> "DiscreteLaw1D":
        return cls([c], [1.0])

    @property
    def size(self) -> int:
        return self.atoms.size

    def mean(self) -> float:
        return float(self.atoms @ self.probs)

    def abs_moment(self, r: float) -> float:
        return float(np.abs(self.atoms) ** r @ self.probs)

    def map(self, fn) -> "DiscreteLaw1D":
        """Law of ``fn(X)``."""
        return DiscreteLaw1D(fn(self.atoms), self.probs)

    def cdf(self, t) -> np.ndarray:
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(self.atoms, np.asarray(t, dtype=float), side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def quantile(self, u) -> np.ndarray:
        """Left-continuous generalized inverse of the CDF on ``(0, 1]``."""
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, np.asarray(u, dtype=float), side="left")
        return self.atoms[np.clip(idx, 0, self.size - 1)]


def as_law(x) -> DiscreteLaw1D:
    if isinstance(x, DiscreteLaw1D):
        return x
    return DiscreteLaw1D.from_sample(x)
