"""The functionals ``psi(x) = |x|_{L^p(mu)}^q`` and their derivatives.

Derivatives are evaluated on given directions only; no derivative tensor is
ever materialized.  A central finite-difference oracle and a probe-based
Hoelder certificate sit alongside the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .measure import (
    DiscreteMeasure,
    LpVector,
    _norm_values,
    abs_power,
    integrate_abs_product,
    integrate_product,
    lp_norm,
    signed_power,
)

__all__ = [
    "SingularEvaluationError",
    "PsiFunctional",
    "SmoothTestFunction",
    "psi_power",
    "abs_power_function",
    "signed_power_function",
    "polynomial_function",
    "psi_eval",
    "psi_d1",
    "psi_d2",
    "psi_d3",
    "FiniteDifference",
    "fd_derivative",
    "holder_constant",
    "bilinear_probe_norm",
    "ClassCheck",
    "lambda_class_check",
]

SINGULAR_NORM = 1e-12
_EPS = np.finfo(float).eps


class SingularEvaluationError(ArithmeticError):
    """A derivative formula was evaluated where it is not defined."""


@dataclass(frozen=True)
class PsiFunctional:
    p: float
    q: float

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"psi needs p >= 2, got {self.p}")
        if self.q <= 0:
            raise ValueError(f"psi needs q > 0, got {self.q}")

    def __call__(self, x: LpVector) -> float:
        return psi_eval(self, x)


def psi_eval(F: PsiFunctional, x: LpVector) -> float:
    return lp_norm(x, F.p) ** F.q


def _guard(F: PsiFunctional, x: LpVector) -> float:
    nx = lp_norm(x, F.p)
    if nx < SINGULAR_NORM:
        raise SingularEvaluationError(
            f"frechet: derivative of psi_(p={F.p}, q={F.q}) evaluated at |x| = {nx:.3g}"
        )
    return nx


def _is_zero(F: PsiFunctional, x: LpVector) -> bool:
    return lp_norm(x, F.p) < SINGULAR_NORM


def psi_d1(F: PsiFunctional, x: LpVector, h: LpVector) -> float:
    """``q |x|^(q-p) int h x|x|^(p-2) dmu``; 0 at the origin when ``q > 1``."""
    if _is_zero(F, x):
        if F.q > 1:
            return 0.0
        raise SingularEvaluationError(f"frechet: psi_d1 at 0 undefined for q = {F.q} <= 1")
    nx = lp_norm(x, F.p)
    return F.q * nx ** (F.q - F.p) * integrate_product([h], F.p - 2, x)


def psi_d2(F: PsiFunctional, x: LpVector, h1: LpVector, h2: LpVector) -> float:
    if _is_zero(F, x):
        if F.q > 2:
            return 0.0
        raise SingularEvaluationError(f"frechet: psi_d2 at 0 undefined for q = {F.q} <= 2")
    p, q = F.p, F.q
    nx = lp_norm(x, p)
    first = q * (p - 1) * nx ** (q - p) * integrate_abs_product([h1, h2], p - 2, x)
    if q == p:
        return first
    a1 = integrate_product([h1], p - 2, x)
    a2 = integrate_product([h2], p - 2, x)
    return first + q * (q - p) * nx ** (q - 2 * p) * a1 * a2


def psi_d3(
    F: PsiFunctional, x: LpVector, h1: LpVector, h2: LpVector, h3: LpVector
) -> float:
    """Third derivative, defined for ``p >= 3`` (and ``p == 2``) away from 0.

    At ``p == 2`` the ``x|x|^(p-4)`` term carries the coefficient ``p - 2 = 0``
    and is dropped.
    """
    p, q = F.p, F.q
    if p < 3 and p != 2:
        raise ValueError(f"frechet: psi_d3 needs p >= 3, got p = {p}")
    nx = _guard(F, x)
    total = 0.0
    if p != 2:
        total += (
            q * (p - 1) * (p - 2) * nx ** (q - p)
            * integrate_product([h1, h2, h3], p - 4, x)
        )
    if q != p:
        a = [integrate_product([h], p - 2, x) for h in (h1, h2, h3)]
        b23 = integrate_abs_product([h2, h3], p - 2, x)
        b13 = integrate_abs_product([h1, h3], p - 2, x)
        b12 = integrate_abs_product([h1, h2], p - 2, x)
        total += q * (p - 1) * (q - p) * nx ** (q - 2 * p) * (
            a[0] * b23 + a[1] * b13 + a[2] * b12
        )
        total += q * (q - p) * (q - 2 * p) * nx ** (q - 3 * p) * a[0] * a[1] * a[2]
    return total


class FiniteDifference(NamedTuple):
    value: float
    error: float  # |D(step) - D(2 step)| / 3


_DEFAULT_EXP = {1: 1 / 3, 2: 1 / 4, 3: 1 / 5}


def _central(func: Callable[[LpVector], float], x: LpVector, dirs, s: float) -> float:
    k = len(dirs)
    total = 0.0
    for signs in np.ndindex(*(2,) * k):
        eps = [1 - 2 * b for b in signs]
        point = x.values.copy()
        for e, h in zip(eps, dirs):
            point = point + e * s * h.values
        total += math.prod(eps) * func(LpVector(x.measure, point))
    return total / (2 * s) ** k


def _kink_safe_step(p: float, x: LpVector, dirs, step: float) -> float:
    """Shrink ``step`` so the widest stencil keeps every nonzero coordinate
    on its own side of 0, where ``|t|^p`` is not smooth unless ``p`` is an
    even integer.  Never shrinks by more than a factor 100."""
    if p % 2 == 0:
        return step
    reach = 2.0 * np.sum([np.abs(h.values) for h in dirs], axis=0)
    live = (x.values != 0) & (reach > 0)
    if not np.any(live):
        return step
    limit = 0.5 * float(np.min(np.abs(x.values[live]) / reach[live]))
    return max(min(step, limit), 1e-2 * step)


def fd_derivative(
    F: PsiFunctional | Callable[[LpVector], float],
    x: LpVector,
    directions: Sequence[LpVector],
    order: int,
    step: float | None = None,
) -> FiniteDifference:
    """Central-difference estimate of the ``order``-th directional derivative,
    extrapolated from steps ``step`` and ``2 * step``.

    ``directions`` supplies one direction per order; a single direction is
    repeated.  The default step for a psi functional is shortened near
    coordinates close to 0.  ``F`` may be a :class:`PsiFunctional` or any callable on
    vectors.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    dirs = list(directions)
    if len(dirs) == 1:
        dirs = dirs * order
    if len(dirs) != order:
        raise ValueError(f"need {order} directions, got {len(dirs)}")
    if isinstance(F, PsiFunctional):
        func, size = F.__call__, lp_norm(x, F.p)
    elif callable(F):
        func, size = F, float(np.max(np.abs(x.values)))
    else:
        raise TypeError("F must be a PsiFunctional or a callable")
    if step is None:
        step = _EPS ** _DEFAULT_EXP[order] * (1.0 + size)
        if isinstance(F, PsiFunctional):
            step = _kink_safe_step(F.p, x, dirs, step)
    if step <= 0:
        raise ValueError("step must be positive")
    d1 = _central(func, x, dirs, step)
    d2 = _central(func, x, dirs, 2 * step)
    # one Richardson step cancels the O(step^2) truncation term
    return FiniteDifference((4.0 * d1 - d2) / 3.0, abs(d1 - d2) / 3.0)


def holder_constant(p: float) -> float:
    """``6(2p^2 - 8p + 7)``, the Lipschitz constant of the second derivative
    of ``|.|_p^3`` for ``p >= 3``."""
    if p < 3:
        raise ValueError(f"holder_constant needs p >= 3, got {p}")
    return 6.0 * (2 * p * p - 8 * p + 7)


# ---------------------------------------------------------------------------
# smooth test functions


_KINDS = ("psi_power", "abs_power", "signed_power", "polynomial")


@dataclass(frozen=True)
class SmoothTestFunction:
    """A scaled test function ``scale * base(x)``.

    Kinds: ``psi_power`` (params ``(p, q)``, vector argument), ``abs_power``
    (``|x|^r``), ``signed_power`` (``x|x|^(r-1)``) and ``polynomial``
    (coefficients in increasing degree).  Scalar kinds act elementwise.
    """

    kind: str
    params: tuple
    scale: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown test function kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "psi_power":
            PsiFunctional(*self.params)

    @property
    def is_scalar(self) -> bool:
        return self.kind != "psi_power"

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return f"{self.kind}{self.params}*{self.scale:.6g}"

    def evaluate(self, x, measure: DiscreteMeasure | None = None) -> np.ndarray:
        """Evaluate on a scalar array, or on rows of shape ``(..., m)`` for psi."""
        x = np.asarray(x, dtype=float)
        if self.kind == "psi_power":
            if measure is None:
                raise ValueError("psi_power needs a measure")
            p, q = self.params
            return self.scale * _norm_values(x, measure.weights, p) ** q
        if self.kind == "abs_power":
            return self.scale * abs_power(x, self.params[0])
        if self.kind == "signed_power":
            return self.scale * signed_power(x, self.params[0])
        return self.scale * np.polynomial.polynomial.polyval(x, self.params)

    def __call__(self, x, measure=None):
        if isinstance(x, LpVector):
            return float(self.evaluate(x.values, x.measure))
        return self.evaluate(x, measure)

    def second_derivative_scalar(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "abs_power":
            (r,) = self.params
            return self.scale * r * (r - 1) * abs_power(x, r - 2)
        if self.kind == "signed_power":
            (r,) = self.params
            return self.scale * r * (r - 1) * signed_power(x, r - 2)
        if self.kind == "polynomial":
            c = np.polynomial.polynomial.polyder(np.asarray(self.params, dtype=float), 2)
            return self.scale * np.polynomial.polynomial.polyval(x, c)
        raise TypeError("not a scalar test function")

    def second_derivative(self, x: LpVector, u: LpVector, v: LpVector) -> float:
        if self.kind != "psi_power":
            raise TypeError("use second_derivative_scalar for scalar kinds")
        return self.scale * psi_d2(PsiFunctional(*self.params), x, u, v)

    def derivatives_at_zero(self) -> tuple[float, float, float]:
        """``(f(0), f'(0), f''(0))`` for scalar kinds."""
        if self.kind == "polynomial":
            c = list(self.params) + [0.0, 0.0, 0.0]
            return (self.scale * c[0], self.scale * c[1], 2 * self.scale * c[2])
        if self.kind in ("abs_power", "signed_power"):
            (r,) = self.params
            f2 = float(self.second_derivative_scalar(0.0))
            return (0.0, 0.0, f2) if r > 1 else (0.0, math.nan, math.nan)
        raise TypeError("derivatives_at_zero is for scalar kinds")


def psi_power(p: float, q: float, scale: float = 1.0, name: str = "") -> SmoothTestFunction:
    return SmoothTestFunction("psi_power", (float(p), float(q)), scale, name)


def abs_power_function(r: float, scale: float = 1.0, name: str = "") -> SmoothTestFunction:
    return SmoothTestFunction("abs_power", (float(r),), scale, name)


def signed_power_function(r: float, scale: float = 1.0, name: str = "") -> SmoothTestFunction:
    return SmoothTestFunction("signed_power", (float(r),), scale, name)


def polynomial_function(coeffs, scale: float = 1.0, name: str = "") -> SmoothTestFunction:
    return SmoothTestFunction("polynomial", tuple(float(c) for c in coeffs), scale, name)


# ---------------------------------------------------------------------------
# operator norms of bilinear forms, lower-bounded by probes


def _random_unit(rng, mu: DiscreteMeasure, p: float) -> np.ndarray:
    kind = rng.integers(3)
    m = mu.size
    if kind == 0:
        v = rng.standard_normal(m)
    elif kind == 1:
        v = np.zeros(m)
        idx = rng.choice(m, size=min(m, int(rng.integers(1, 3))), replace=False)
        v[idx] = rng.choice([-1.0, 1.0], size=idx.size)
    else:
        v = rng.standard_t(2, size=m)
    nv = _norm_values(v, mu.weights, p)
    if nv == 0:
        v = np.ones(m)
        nv = _norm_values(v, mu.weights, p)
    return v / nv


def bilinear_probe_norm(
    form: Callable[[LpVector, LpVector], float],
    mu: DiscreteMeasure,
    p: float,
    rng: np.random.Generator,
    probes: int = 64,
    extra: Sequence[np.ndarray] = (),
) -> float:
    """Lower bound for ``sup |form(u, v)|`` over unit vectors of L^p(mu).

    Probes are random rank-one pairs plus the supplied ``extra`` directions
    (normalized, used both diagonally and in pairs).
    """
    cands = []
    for e in extra:
        ne = _norm_values(np.asarray(e, dtype=float), mu.weights, p)
        if ne > 0:
            cands.append(np.asarray(e, dtype=float) / ne)
    best = 0.0
    for a in cands:
        for b in cands:
            best = max(best, abs(form(LpVector(mu, a), LpVector(mu, b))))
    for _ in range(probes):
        u = _random_unit(rng, mu, p)
        v = u if rng.random() < 0.5 else _random_unit(rng, mu, p)
        best = max(best, abs(form(LpVector(mu, u), LpVector(mu, v))))
    return best


@dataclass
class ClassCheck:
    """Outcome of :func:`lambda_class_check`."""

    max_ratio: float
    norm_at_zero: float
    passed: bool
    trials: int
    note: str = "probe lower bound"
    worst_pair: tuple = field(default=(), repr=False)


def _random_point(rng, mu: DiscreteMeasure) -> np.ndarray:
    scale = 10.0 ** rng.uniform(-2, 1)
    return scale * rng.standard_normal(mu.size)


def lambda_class_check(
    f: SmoothTestFunction,
    delta: float,
    M: float,
    trials: int = 1000,
    seed: int = 0,
    measure: DiscreteMeasure | None = None,
    probes: int = 64,
    tol: float = 1e-9,
) -> ClassCheck:
    """Certify ``f`` in the class of functions whose second derivative is
    ``delta``-Hoelder with constant 1 and whose second derivative at 0 has
    norm at most ``M``.

    The ratio ``|f''(x) - f''(y)| / |x - y|^delta`` is maximized over random
    pairs; for psi functionals the bilinear norm is itself a probe lower
    bound.  ``tol`` absorbs floating-point noise in the comparison with 1.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if M < 0:
        raise ValueError("M must be nonnegative")
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_pair = ()
    if f.is_scalar:
        for _ in range(trials):
            x = 10.0 ** rng.uniform(-3, 1) * rng.standard_normal()
            y = 10.0 ** rng.uniform(-3, 1) * rng.standard_normal()
            if rng.random() < 0.25:
                y = x + 10.0 ** rng.uniform(-6, 0) * rng.choice([-1, 1])
            if x == y:
                continue
            r = abs(
                float(f.second_derivative_scalar(x)) - float(f.second_derivative_scalar(y))
            ) / abs(x - y) ** delta
            if r > worst:
                worst, worst_pair = r, (x, y)
        at_zero = abs(float(f.second_derivative_scalar(0.0)))
    else:
        if measure is None:
            raise ValueError("psi_power checks need a measure")
        p, q = f.params
        F = PsiFunctional(p, q)
        for _ in range(trials):
            xv = _random_point(rng, measure)
            yv = _random_point(rng, measure) if rng.random() < 0.7 else xv + 10.0 ** rng.uniform(
                -4, 0
            ) * rng.standard_normal(measure.size)
            x, y = LpVector(measure, xv), LpVector(measure, yv)
            dist = lp_norm(x - y, p)
            if dist == 0:
                continue

            def form(u, v, x=x, y=y):
                return f.scale * (psi_d2(F, x, u, v) - psi_d2(F, y, u, v))

            nb = bilinear_probe_norm(form, measure, p, rng, probes, extra=(xv, yv, xv - yv))
            r = nb / dist**delta
            if r > worst:
                worst, worst_pair = r, (xv, yv)
        at_zero = _psi_norm_at_zero(f, measure)
    passed = worst <= 1.0 + tol and at_zero <= M + tol
    return ClassCheck(worst, at_zero, bool(passed), trials, worst_pair=worst_pair)


def _psi_norm_at_zero(f: SmoothTestFunction, mu: DiscreteMeasure) -> float:
    p, q = f.params
    if q > 2:
        return 0.0
    if q == 2 and p == 2:
        # the form 2<u, v>_{L^2(mu)} has norm 2
        return 2.0 * f.scale
    return math.inf
