"""Empirical-CDF fields ``t -> n^(-1/2) sum_k (1{Y_k <= t} - F(t))`` as grid functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .generators import FiniteMarkov, IIDModel, LSVModel, SamplePath, _cached_ulam, simulate_batch, replicate_rng
from .measure import DiscreteMeasure, LpVector, _norm_values, dual_maximizer, lp_norm, pairing

__all__ = [
    "CDFSpec",
    "uniform_cdf",
    "model_cdf",
    "tabulated_cdf",
    "empirical_cdf",
    "calibration_cdf",
    "EmpiricalField",
    "empirical_field",
    "field_batch",
    "field_builder",
    "sobolev_sup",
    "iid_l2_moment",
    "default_grid",
]


@dataclass(frozen=True)
class CDFSpec:
    """A distribution function together with a record of where it came from."""

    fn: Callable[[np.ndarray], np.ndarray]
    source: str

    def on_grid(self, mu: DiscreteMeasure) -> np.ndarray:
        F = np.asarray(self.fn(mu.points), dtype=float)
        if F.shape != mu.points.shape:
            raise ValueError("cdf returned the wrong shape")
        if np.any(F < -1e-12) or np.any(F > 1 + 1e-12):
            raise ValueError("empirical: cdf values leave [0, 1]")
        if np.any(np.diff(F) < -1e-12):
            raise ValueError("empirical: cdf is not nondecreasing on the grid")
        return np.clip(F, 0.0, 1.0)


def uniform_cdf(a: float = 0.0, b: float = 1.0) -> CDFSpec:
    return CDFSpec(lambda t: np.clip((np.asarray(t) - a) / (b - a), 0.0, 1.0), f"uniform({a!r},{b!r})")


def model_cdf(model, m_bins: int = 1024) -> CDFSpec:
    """Exact marginal cdf; for LSV the Ulam approximation of the invariant law."""
    if isinstance(model, (IIDModel, FiniteMarkov)):
        return CDFSpec(model.cdf, f"exact:{model.tag}")
    if isinstance(model, LSVModel):
        return CDFSpec(_cached_ulam(model.gamma, m_bins).cdf, f"ulam:gamma={model.gamma!r},m={m_bins}")
    raise TypeError(f"no cdf for {type(model).__name__}")


def tabulated_cdf(points, values) -> CDFSpec:
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(values, dtype=float)
    if np.any(np.diff(vals) < 0):
        raise ValueError("empirical: tabulated cdf is not nondecreasing")
    return CDFSpec(lambda t: np.interp(t, pts, vals, left=0.0, right=1.0), "tabulated")


def empirical_cdf(sample) -> CDFSpec:
    x = np.sort(np.asarray(sample, dtype=float).ravel())

    def fn(t):
        return np.searchsorted(x, np.asarray(t, dtype=float), side="right") / x.size

    return CDFSpec(fn, f"empirical(n={x.size})")


def calibration_cdf(model, n_cal: int = 1_000_000, seed: int = 0) -> CDFSpec:
    """Plug-in cdf from one long independent run of ``model``."""
    path = simulate_batch(model, n_cal, 1, replicate_rng(seed, 99))[0]
    spec = empirical_cdf(path)
    return CDFSpec(spec.fn, f"calibration(n_cal={n_cal},seed={seed})")


@dataclass(frozen=True, eq=False)
class EmpiricalField:
    measure: DiscreteMeasure
    true_cdf: np.ndarray
    field: LpVector
    n: int
    cdf_source: str = ""


def _counts_below(paths: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """``#{k : Y_k <= t_i}`` for every row of ``paths``, shape ``(reps, m)``."""
    reps = paths.shape[0]
    m = grid.size
    # 1{Y <= t_i} holds from the first grid index with t_i >= Y onward
    first = np.searchsorted(grid, paths, side="left")
    flat = (np.arange(reps)[:, None] * (m + 1) + first).ravel()
    hist = np.bincount(flat, minlength=reps * (m + 1)).reshape(reps, m + 1)
    return np.cumsum(hist[:, :m], axis=1)


def field_batch(paths: np.ndarray, F_grid: np.ndarray, mu: DiscreteMeasure) -> np.ndarray:
    """Normalized fields for a batch of paths, shape ``(reps, m)``."""
    paths = np.atleast_2d(paths)
    n = paths.shape[1]
    return (_counts_below(paths, mu.points) - n * F_grid[None, :]) / math.sqrt(n)


def field_builder(F: CDFSpec, mu: DiscreteMeasure) -> Callable[[np.ndarray], np.ndarray]:
    F_grid = F.on_grid(mu)
    return lambda paths: field_batch(paths, F_grid, mu)


def empirical_field(path, F: CDFSpec, mu: DiscreteMeasure) -> EmpiricalField:
    values = path.values if isinstance(path, SamplePath) else np.asarray(path, dtype=float)
    if values.size < 1:
        raise ValueError("empty path")
    F_grid = F.on_grid(mu)
    g = field_batch(values[None, :], F_grid, mu)[0]
    return EmpiricalField(mu, F_grid, LpVector(mu, g), values.size, F.source)


def sobolev_sup(field: EmpiricalField | LpVector, p: float) -> float:
    """``sup{|int g G_n dmu| : |g|_q <= 1}``, attained by the dual maximizer."""
    if p < 2:
        raise ValueError("sobolev_sup needs p >= 2")
    v = field.field if isinstance(field, EmpiricalField) else field
    if lp_norm(v, p) == 0:
        return 0.0
    return abs(pairing(dual_maximizer(v, p), v))


def iid_l2_moment(F: CDFSpec | np.ndarray, mu: DiscreteMeasure) -> float:
    """``int F (1 - F) dmu``."""
    Fg = F.on_grid(mu) if isinstance(F, CDFSpec) else np.asarray(F, dtype=float)
    return float(mu.weights @ (Fg * (1.0 - Fg)))


def default_grid(sample, m: int = 512, pad: float = 0.05) -> DiscreteMeasure:
    """``m`` equispaced points over the sample range widened by ``pad`` on each
    side, each carrying the grid spacing as weight."""
    x = np.asarray(sample, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    span = hi - lo if hi > lo else 1.0
    a, b = lo - pad * span, hi + pad * span
    pts = np.linspace(a, b, m)
    return DiscreteMeasure(pts, np.full(m, (b - a) / (m - 1)))


def field_norms(paths: np.ndarray, F: CDFSpec, mu: DiscreteMeasure, p: float) -> np.ndarray:
    """``|G_n|_p`` for each path in the batch."""
    return _norm_values(field_batch(paths, F.on_grid(mu), mu), mu.weights, p)
