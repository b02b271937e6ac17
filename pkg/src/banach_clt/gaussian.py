"""Covariance of the Gaussian limit and sampling from it.

For a finite chain the long-run covariance has a closed form through the
fundamental matrix ``Z = (I - P + 1 pi)^-1``: since ``P^k - 1 pi = (P - 1 pi)^k``
for ``k >= 1``, the lag sum ``sum_{k>=1} (P^k - 1 pi)`` equals ``Z - I``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .generators import FiniteMarkov, IIDModel, LSVModel, _cached_ulam, simulate_batch, replicate_rng
from .measure import DiscreteMeasure, LpVector, _norm_values

__all__ = [
    "CovarianceOperator",
    "covariance_series",
    "markov_lag_covariance",
    "scalar_long_run_variance",
    "psd_project",
    "GaussianSampler",
    "sample_gaussian",
    "gaussian_moment",
]


@dataclass(frozen=True, eq=False)
class CovarianceOperator:
    """Symmetric matrix ``K(t_i, t_j)`` on the grid of ``measure``.

    ``measure`` is ``None`` for a scalar (1 x 1) covariance.  ``lag_window``
    is ``-1`` when the lag series was summed in closed form.
    """

    matrix: np.ndarray
    measure: DiscreteMeasure | None = None
    lag_window: int = 0
    taper: str = "truncate"
    clip_error: float = 0.0

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if K.shape[0] != K.shape[1]:
            raise ValueError("covariance matrix must be square")
        if self.measure is not None and K.shape[0] != self.measure.size:
            raise ValueError("covariance size does not match the grid")
        K = 0.5 * (K + K.T)
        K.setflags(write=False)
        object.__setattr__(self, "matrix", K)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.measure is None

    def l2_trace(self) -> float:
        """``E |G|^2`` in ``L^2(measure)`` (plain variance when scalar)."""
        if self.measure is None:
            return float(np.trace(self.matrix))
        return float(self.measure.weights @ np.diag(self.matrix))

    def to_csv(self, path, comments: Sequence[str] = ()) -> None:
        pts = self.measure.points if self.measure is not None else np.array([0.0])
        with open(path, "w", newline="") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            fh.write(f"# lag_window={self.lag_window}\n# taper={self.taper}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [format(t, ".17g") for t in pts])
            for t, row in zip(pts, self.matrix):
                w.writerow([format(t, ".17g")] + [format(v, ".17g") for v in row])


def _indicator_matrix(states: np.ndarray, mu: DiscreteMeasure) -> np.ndarray:
    return (states[:, None] <= mu.points[None, :]).astype(float)


def markov_lag_covariance(model: FiniteMarkov, A: np.ndarray, k: int) -> np.ndarray:
    """``cov(a(X_0), a(X_k))`` for the feature map with rows ``A[state]``."""
    from .generators import markov_power

    pi = model.stationary
    mean = pi @ A
    return A.T @ (pi[:, None] * (markov_power(model, k) @ A)) - np.outer(mean, mean)


def _markov_long_run(model: FiniteMarkov, A: np.ndarray) -> np.ndarray:
    pi = model.stationary
    d = model.size
    Z = np.linalg.inv(np.eye(d) - model.transition + np.outer(np.ones(d), pi))
    c0 = markov_lag_covariance(model, A, 0)
    tail = A.T @ (pi[:, None] * ((Z - np.eye(d)) @ A))
    return c0 + tail + tail.T


def scalar_long_run_variance(model) -> float:
    """``sum_k cov(X_0, X_k)`` over all integers ``k``."""
    if isinstance(model, IIDModel):
        return model.variance()
    if isinstance(model, FiniteMarkov):
        A = (model.states - model.mean)[:, None]
        return float(_markov_long_run(model, A)[0, 0])
    raise TypeError("closed-form variance needs an i.i.d. or finite chain model")


def _taper_weights(L: int, taper: str) -> np.ndarray:
    k = np.arange(1, L + 1)
    if taper == "bartlett":
        return 1.0 - k / (L + 1.0)
    if taper == "truncate":
        return np.ones(L)
    raise ValueError(f"unknown taper {taper!r}")


def _path_covariance(features: np.ndarray, L: int, taper: str) -> np.ndarray:
    """Lag-window estimate from features of shape ``(reps, n, m)``."""
    reps, n, m = features.shape
    if L >= n:
        raise ValueError(f"gaussian: max_lag {L} exceeds available path length {n}")
    z = features - features.mean(axis=(0, 1), keepdims=True)
    K = np.einsum("rti,rtj->ij", z, z) / (reps * n)
    for k, w in zip(range(1, L + 1), _taper_weights(L, taper)):
        ck = np.einsum("rti,rtj->ij", z[:, :-k], z[:, k:]) / (reps * n)
        K += w * (ck + ck.T)
    return K


def covariance_series(
    source,
    mu: DiscreteMeasure | None = None,
    max_lag: int | None = None,
    taper: str | None = None,
    cdf=None,
) -> CovarianceOperator:
    """Long-run covariance of the scalar sequence (``mu is None``) or of the
    indicator field ``t -> 1{Y <= t} - F(t)`` on the grid of ``mu``.

    ``source`` is a model or an array of paths (shape ``(n,)`` or
    ``(reps, n)``).  Finite chains are summed in closed form; i.i.d. models
    give the marginal covariance (the Brownian bridge for the field).  Paths
    use a lag window, Bartlett with ``L = floor(n^(1/3))`` by default.
    """
    if isinstance(source, FiniteMarkov) and max_lag is None:
        if mu is None:
            A = (source.states - source.mean)[:, None]
        else:
            A = _indicator_matrix(source.states, mu)
        return CovarianceOperator(_markov_long_run(source, A), mu, -1, "closed-form")
    if isinstance(source, FiniteMarkov):
        A = (source.states - source.mean)[:, None] if mu is None else _indicator_matrix(source.states, mu)
        K = markov_lag_covariance(source, A, 0)
        taper = taper or "truncate"
        for k, w in zip(range(1, max_lag + 1), _taper_weights(max_lag, taper)):
            ck = markov_lag_covariance(source, A, k)
            K = K + w * (ck + ck.T)
        return CovarianceOperator(K, mu, max_lag, taper)
    if isinstance(source, IIDModel):
        if mu is None:
            return CovarianceOperator([[source.variance()]], None, 0, "none")
        F = np.asarray(source.cdf(mu.points))
        return CovarianceOperator(np.minimum.outer(F, F) - np.outer(F, F), mu, 0, "none")
    if isinstance(source, LSVModel):
        raise TypeError("simulate LSV paths first and pass the array")
    paths = np.atleast_2d(np.asarray(source, dtype=float))
    n = paths.shape[1]
    L = int(math.floor(n ** (1 / 3))) if max_lag is None else int(max_lag)
    taper = taper or "bartlett"
    if mu is None:
        feats = paths[:, :, None]
    else:
        feats = (paths[:, :, None] <= mu.points[None, None, :]).astype(float)
    return CovarianceOperator(_path_covariance(feats, L, taper), mu, L, taper)


def psd_project(K: CovarianceOperator, tol: float = 1e-10) -> CovarianceOperator:
    """Clip eigenvalues below ``tol * lambda_max`` to zero.

    The Frobenius norm of the change is stored in ``clip_error``.
    """
    w, V = np.linalg.eigh(K.matrix)
    top = max(float(w.max()), 0.0)
    clipped = np.where(w < tol * top, 0.0, w)
    if np.array_equal(clipped, w):
        return K
    M = (V * clipped) @ V.T
    err = float(np.linalg.norm(M - K.matrix))
    return CovarianceOperator(M, K.measure, K.lag_window, K.taper, err)


class GaussianSampler:
    """Centered Gaussian vectors with covariance ``factor @ factor.T``."""

    def __init__(self, cov: CovarianceOperator, tol: float = 1e-10):
        proj = psd_project(cov, tol)
        w, V = np.linalg.eigh(proj.matrix)
        keep = w > 0
        self.cov = proj
        self.measure = cov.measure
        self.factor = V[:, keep] * np.sqrt(w[keep])

    @classmethod
    def scalar(cls, variance: float) -> "GaussianSampler":
        return cls(CovarianceOperator([[variance]]))

    @property
    def rank(self) -> int:
        return self.factor.shape[1]

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Array of shape ``(size, m)``, or ``(size,)`` when scalar."""
        m = self.factor.shape[0]
        if self.rank == 0:
            out = np.zeros((size, m))
        else:
            out = rng.standard_normal((size, self.rank)) @ self.factor.T
        return out[:, 0] if self.measure is None else out

    def as_vectors(self, draws: np.ndarray) -> list[LpVector]:
        if self.measure is None:
            raise TypeError("scalar samples are plain floats")
        return [LpVector(self.measure, row) for row in draws]


def sample_gaussian(sampler: GaussianSampler, n_samples: int, seed: int) -> np.ndarray:
    return sampler.sample(n_samples, replicate_rng(seed))


def gaussian_moment(
    sampler: GaussianSampler, p_norm: float, power: float, n_mc: int = 100_000, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo ``E |G|^power`` (norm in ``L^p_norm``) with its stderr."""
    if n_mc < 1000:
        raise ValueError("gaussian_moment needs n_mc >= 1000")
    g = sample_gaussian(sampler, n_mc, seed)
    if sampler.measure is None:
        vals = np.abs(g) ** power
    else:
        vals = _norm_values(g, sampler.measure.weights, p_norm) ** power
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_mc))


def lsv_field_covariance(gamma: float, mu: DiscreteMeasure, n: int, reps: int, seed: int = 0, **kw):
    """Path-based covariance of the LSV indicator field (Bartlett window)."""
    model = LSVModel(gamma, **kw)
    paths = simulate_batch(model, n, reps, replicate_rng(seed))
    return covariance_series(paths, mu)


def lsv_cdf(gamma: float, m_bins: int = 1024):
    return _cached_ulam(gamma, m_bins).cdf
