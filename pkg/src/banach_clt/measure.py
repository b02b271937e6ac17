"""Discretized L^p(mu) spaces.

A measure is a finite collection of point masses on an increasing grid; every
integral is therefore an exact weighted sum.  Functions on the grid carry
their measure so that norms, pairings and products can check compatibility.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "DiscreteMeasure",
    "LpVector",
    "DualExponent",
    "MeasureMismatchError",
    "conjugate_exponent",
    "lp_norm",
    "integrate_product",
    "two_smooth_slack",
    "dual_maximizer",
    "pairing",
    "lebesgue_grid",
    "write_vector_csv",
    "read_vector_csv",
]


class MeasureMismatchError(ValueError):
    """Raised when vectors defined on different measures are combined."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Point masses ``weights[i]`` located at ``points[i]``.

    ``truncated`` records that the grid is a truncation of a measure with
    mass outside ``[points[0], points[-1]]``.
    """

    points: np.ndarray
    weights: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        points = _frozen(self.points).ravel()
        weights = _frozen(self.weights).ravel()
        if points.size == 0:
            raise ValueError("measure needs at least one point")
        if points.shape != weights.shape:
            raise ValueError(
                f"points and weights differ in length ({points.size} != {weights.size})"
            )
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(weights)):
            raise ValueError("points and weights must be finite")
        if np.any(np.diff(points) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if not np.any(weights > 0):
            raise ValueError("at least one weight must be positive")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def vector(self, values) -> "LpVector":
        return LpVector(self, values)

    def zeros(self) -> "LpVector":
        return LpVector(self, np.zeros(self.size))

    def cumulative(self) -> np.ndarray:
        """Signed cumulative ``F_mu`` at the grid points.

        ``F_mu(x) = mu(]0, x])`` for ``x >= 0`` and ``-mu([x, 0[)`` for ``x < 0``.
        """
        return signed_cumulative(self, self.points)

    def same_as(self, other: "DiscreteMeasure") -> bool:
        return self is other or (
            self.size == other.size
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )


def signed_cumulative(mu: DiscreteMeasure, x) -> np.ndarray:
    """Evaluate ``F_mu`` at arbitrary locations ``x``."""
    x = np.asarray(x, dtype=float)
    pts, w = mu.points, mu.weights
    pos = np.where(pts > 0, w, 0.0)
    neg = np.where(pts < 0, w, 0.0)
    cpos = np.concatenate([[0.0], np.cumsum(pos)])
    cneg = np.concatenate([[0.0], np.cumsum(neg)])
    # mu(]0, x]) = sum of positive-point masses with point <= x
    right = np.searchsorted(pts, x, side="right")
    # mu([x, 0[) = sum of negative-point masses with point >= x
    left = np.searchsorted(pts, x, side="left")
    out = np.where(x >= 0, cpos[right], -(cneg[-1] - cneg[left]))
    return out


@dataclass(frozen=True, eq=False)
class LpVector:
    """A function on the grid of ``measure``."""

    measure: DiscreteMeasure
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = _frozen(self.values).ravel()
        if values.size != self.measure.size:
            raise ValueError(
                f"vector has {values.size} values but measure has {self.measure.size} points"
            )
        object.__setattr__(self, "values", values)

    def _check(self, other: "LpVector") -> None:
        if not self.measure.same_as(other.measure):
            raise MeasureMismatchError("vectors live on different measures")

    def __add__(self, other: "LpVector") -> "LpVector":
        self._check(other)
        return LpVector(self.measure, self.values + other.values)

    def __sub__(self, other: "LpVector") -> "LpVector":
        self._check(other)
        return LpVector(self.measure, self.values - other.values)

    def __neg__(self) -> "LpVector":
        return LpVector(self.measure, -self.values)

    def __mul__(self, c: float) -> "LpVector":
        return LpVector(self.measure, float(c) * self.values)

    __rmul__ = __mul__

    def norm(self, p: float) -> float:
        return lp_norm(self, p)

    def is_zero(self) -> bool:
        return not np.any(self.values[self.measure.weights > 0])


@dataclass(frozen=True)
class DualExponent:
    """Conjugate pair ``1/p + 1/q = 1``; ``q = inf`` when ``p = 1``."""

    p: float
    q: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "q", conjugate_exponent(self.p))


def conjugate_exponent(p: float) -> float:
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _norm_values(values: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """Row-wise L^p norm for an array of shape (..., m)."""
    a = np.abs(values)
    if math.isinf(p):
        return np.max(np.where(weights > 0, a, 0.0), axis=-1)
    # scale by the max so |v|^p neither overflows nor underflows
    scale = np.max(a, axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    r = a / safe
    if p == 2:
        return np.squeeze(safe, axis=-1) * np.sqrt(np.sum(weights * r * r, axis=-1))
    s = np.sum(weights * r**p, axis=-1)
    return np.squeeze(safe, axis=-1) * s ** (1.0 / p)


def lp_norm(x: LpVector, p: float) -> float:
    """``(sum_i w_i |v_i|^p)^(1/p)``."""
    if p < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    if x.values.size != x.measure.weights.size:
        raise ValueError("values and weights differ in length")
    return float(_norm_values(x.values, x.measure.weights, p))


def signed_power(v: np.ndarray, r: float) -> np.ndarray:
    """``sgn(v)|v|^r`` with the value 0 wherever ``v == 0`` (any ``r``)."""
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sign(v) * np.where(a > 0, a, 1.0) ** r
    return np.where(a > 0, out, 0.0)


def abs_power(v: np.ndarray, r: float) -> np.ndarray:
    """``|v|^r`` with ``|0|^0 = 1`` and ``|0|^r = 0`` for ``r > 0``."""
    a = np.abs(np.asarray(v, dtype=float))
    if r == 0:
        return np.ones_like(a)
    with np.errstate(divide="ignore"):
        out = np.where(a > 0, a, 1.0) ** r
    if r < 0:
        return np.where(a > 0, out, np.inf)
    return np.where(a > 0, out, 0.0)


def _same_measure(vectors: Sequence[LpVector]) -> DiscreteMeasure:
    mu = vectors[0].measure
    for v in vectors[1:]:
        if not mu.same_as(v.measure):
            raise MeasureMismatchError("vectors live on different measures")
    return mu


def integrate_product(
    factors: Sequence[LpVector], kernel_exponent: float, base: LpVector
) -> float:
    """``int (prod_j h_j) x|x|^kernel_exponent dmu`` for ``x = base``.

    The pointwise integrand uses ``sgn(x)|x|^(kernel_exponent + 1)``, taken to
    be 0 where ``x`` vanishes.
    """
    mu = _same_measure([base, *factors])
    prod = np.ones(mu.size)
    for h in factors:
        prod = prod * h.values
    integrand = prod * signed_power(base.values, kernel_exponent + 1.0)
    return float(np.sum(mu.weights * integrand))


def integrate_abs_product(
    factors: Sequence[LpVector], exponent: float, base: LpVector
) -> float:
    """``int (prod_j h_j) |x|^exponent dmu`` for ``x = base``."""
    mu = _same_measure([base, *factors])
    prod = np.ones(mu.size)
    for h in factors:
        prod = prod * h.values
    return float(np.sum(mu.weights * prod * abs_power(base.values, exponent)))


def pairing(g: LpVector, d: LpVector) -> float:
    """``int g d dmu``."""
    _same_measure([g, d])
    return float(np.sum(g.measure.weights * g.values * d.values))


def two_smooth_slack(x: LpVector, y: LpVector, p: float) -> float:
    """``2|x|^2 + 2(p-1)|y|^2 - |x+y|^2 - |x-y|^2`` in L^p(mu).

    Nonnegative for every pair when ``p >= 2``; identically zero when ``p == 2``.
    """
    if p < 2:
        raise ValueError(f"2-smoothness is stated for p >= 2, got {p}")
    _same_measure([x, y])
    nx, ny = lp_norm(x, p), lp_norm(y, p)
    return 2 * nx**2 + 2 * (p - 1) * ny**2 - lp_norm(x + y, p) ** 2 - lp_norm(x - y, p) ** 2


def dual_maximizer(d: LpVector, p: float) -> LpVector:
    """Unit vector of L^q(mu) attaining ``int g d dmu = |d|_p``."""
    if p <= 1:
        raise ValueError(f"dual_maximizer needs p > 1, got {p}")
    nd = lp_norm(d, p)
    if nd == 0:
        raise ValueError("dual_maximizer is undefined for the zero vector")
    v = d.values / nd
    return LpVector(d.measure, signed_power(v, p - 1.0))


def lebesgue_grid(a: float, b: float, m: int) -> DiscreteMeasure:
    """Midpoint discretization of Lebesgue measure on ``[a, b]``."""
    if not b > a:
        raise ValueError("need b > a")
    if m < 1:
        raise ValueError("need at least one cell")
    h = (b - a) / m
    return DiscreteMeasure(a + h * (np.arange(m) + 0.5), np.full(m, h))


def write_vector_csv(path, x: LpVector | DiscreteMeasure, comments: Sequence[str] = ()) -> None:
    """Write ``point,weight,value`` rows (values are 0 for a bare measure)."""
    if isinstance(x, DiscreteMeasure):
        mu, vals = x, np.zeros(x.size)
    else:
        mu, vals = x.measure, x.values
    with open(path, "w", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        if mu.truncated:
            fh.write("# truncated=true\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "weight", "value"])
        for t, wt, v in zip(mu.points, mu.weights, vals):
            w.writerow([format(t, ".17g"), format(wt, ".17g"), format(v, ".17g")])


def read_vector_csv(path) -> LpVector:
    truncated = False
    rows = []
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                if line[1:].strip() == "truncated=true":
                    truncated = True
                continue
            lines.append(line)
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or set(reader.fieldnames) != {"point", "weight", "value"}:
        raise ValueError(f"{path}: expected columns point,weight,value")
    for row in reader:
        rows.append((float(row["point"]), float(row["weight"]), float(row["value"])))
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    mu = DiscreteMeasure(arr[:, 0], arr[:, 1], truncated=truncated)
    return LpVector(mu, arr[:, 2])
