"""The explicit rate bound ``n^(-delta/2) b(n, M, delta)``, its ingredients,
and log-log rate fitting."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dependence import CoefficientSequence, _ols_slope, coefficient_sequence
from .generators import FiniteMarkov, IIDModel, markov_power, replicate_rng, simulate_batch
from .gaussian import GaussianSampler, covariance_series, scalar_long_run_variance
from .measure import _norm_values
from .metrics import DeltaEstimate, delta_n

__all__ = [
    "c_delta",
    "LambdaReport",
    "lambda_sup",
    "BoundInputs",
    "BoundResult",
    "bound_b",
    "RateFit",
    "rate_fit",
    "DominanceRow",
    "DominanceReport",
    "dominance_check",
    "exact_bound_inputs",
    "normal_abs_moment",
]


def c_delta(lam: float, eg2: float, delta: float) -> float:
    """``(2^delta + 2) lam^(delta/2) + 2^delta eg2^(delta/2)``."""
    if lam < 0 or eg2 < 0:
        raise ValueError("lam and eg2 must be nonnegative")
    return (2.0**delta + 2.0) * lam ** (delta / 2) + 2.0**delta * eg2 ** (delta / 2)


def normal_abs_moment(r: float, variance: float = 1.0) -> float:
    """``E|N(0, variance)|^r``."""
    return variance ** (r / 2) * 2 ** (r / 2) * math.gamma((r + 1) / 2) / math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# lambda = sup_k E|S_k|^2 / k


@dataclass
class LambdaReport:
    value: float
    argmax: int
    ratios: np.ndarray
    exact: bool
    limit: float = math.nan
    plateau: bool = True
    stderr: float = 0.0

    @property
    def upper(self) -> float:
        """The larger of the finite-range maximum and the long-run limit."""
        return self.value if math.isnan(self.limit) else max(self.value, self.limit)


def _scalar_ratios(model, k_max: int) -> np.ndarray:
    if isinstance(model, IIDModel):
        return np.full(k_max, model.variance())
    s = model.states - model.mean
    pi = model.stationary
    c = np.array([pi @ (s * (markov_power(model, l) @ s)) for l in range(k_max)])
    k = np.arange(1, k_max + 1)
    # E S_k^2 = k c_0 + 2 sum_{l<k} (k - l) c_l
    out = np.empty(k_max)
    for i, kk in enumerate(k):
        l = np.arange(1, kk)
        out[i] = c[0] + 2.0 * np.sum((1.0 - l / kk) * c[1:kk])
    return out


def lambda_sup(
    model,
    k_max: int = 64,
    reps: int = 2000,
    seed: int = 0,
    field=None,
    measure=None,
    p: float = 2.0,
) -> LambdaReport:
    """``max_{k <= k_max} E|S_k|^2 / k``.

    Scalar i.i.d. and finite-chain models are computed exactly from the
    autocovariances.  With ``field`` (a callable mapping paths to
    unnormalized per-time features ``(reps, n, m)``) the ratios are Monte
    Carlo estimates in ``L^p(measure)``.
    """
    if k_max < 8:
        raise ValueError("lambda_sup needs k_max >= 8")
    if field is None and isinstance(model, (IIDModel, FiniteMarkov)):
        r = _scalar_ratios(model, k_max)
        se = 0.0
        exact = True
        limit = scalar_long_run_variance(model)
    else:
        paths = simulate_batch(model, k_max, reps, replicate_rng(seed))
        if field is None:
            m = getattr(model, "mean", 0.0)
            feats = (paths - (m() if callable(m) else m))[:, :, None]
            weights = np.ones(1)
        else:
            feats = field(paths)
            weights = measure.weights
        sums = np.cumsum(feats, axis=1)
        sq = _norm_values(sums, weights, p) ** 2 / np.arange(1, k_max + 1)[None, :]
        r = sq.mean(axis=0)
        se = float(sq.std(axis=0, ddof=1)[int(np.argmax(r))] / math.sqrt(reps))
        exact = False
        limit = math.nan
    i = int(np.argmax(r))
    half = r[k_max // 2 - 1]
    plateau = abs(r[-1] - half) <= 0.02 * max(abs(r[-1]), 1e-300)
    return LambdaReport(float(r[i]), i + 1, r, exact, limit, bool(plateau), se)


# ---------------------------------------------------------------------------
# the bound


@dataclass
class BoundInputs:
    delta: float
    M: float
    gamma_seq: CoefficientSequence
    gamma2_seq: CoefficientSequence
    moment_x: float
    moment_g: float
    lam: float
    eg2: float

    def __post_init__(self):
        if min(self.M, self.moment_x, self.moment_g, self.lam, self.eg2) < 0:
            raise ValueError("bound inputs must be nonnegative")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")


@dataclass
class BoundResult:
    n: int
    prefactor: float
    bracket: float
    bound: float
    c_delta: float
    gamma_series: float
    gamma2_sum: float
    diagnosis: str = ""


@dataclass
class _Tail:
    ratio: float
    log_c: float
    zero: bool

    def value(self, k):
        if self.zero:
            return np.zeros_like(np.asarray(k, dtype=float))
        return np.exp(self.log_c + np.log(self.ratio) * np.asarray(k, dtype=float))


def _geometric_tail(seq: CoefficientSequence, points: int = 8) -> _Tail:
    ks, vals = seq.array()
    ks, vals = ks[-points:], vals[-points:]
    if np.all(vals <= 1e-300):
        return _Tail(0.0, -math.inf, True)
    pos = vals > 1e-300
    if pos.sum() < 2:
        return _Tail(0.0, -math.inf, True)
    slope, _ = _ols_slope(ks[pos].astype(float), np.log(vals[pos]))
    intercept = float(np.mean(np.log(vals[pos]) - slope * ks[pos]))
    return _Tail(math.exp(slope), intercept, False)


def _series_with_tail(seq: CoefficientSequence, weight, tail: _Tail, upto: float) -> float:
    """``sum_{k>=1}^{upto} weight(k) c(k)`` with values past the last known
    lag taken from the geometric tail."""
    ks, vals = seq.array()
    keep = (ks >= 1) & (ks <= upto)
    total = float(np.sum(weight(ks[keep].astype(float)) * vals[keep]))
    k_last = int(ks.max())
    if upto <= k_last or tail.zero:
        return total
    start = k_last + 1
    stop = upto if math.isfinite(upto) else None
    block = 4096
    while True:
        end = start + block if stop is None else min(start + block, int(stop) + 1)
        k = np.arange(start, end, dtype=float)
        terms = weight(k) * tail.value(k)
        total += float(np.sum(terms))
        if stop is not None and end > stop:
            return total
        if terms[-1] <= 1e-18 * max(total, 1e-300):
            return total
        start = end


def bound_b(inputs: BoundInputs, n: int) -> BoundResult:
    """``n^(-delta/2)`` times the bracket of the rate bound, split apart.

    Coefficient series are completed by a geometric fit on the last 8
    values; a fitted ratio of 1 or more makes the infinite series divergent
    and the bound infinite.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = inputs.delta
    cd = c_delta(inputs.lam, inputs.eg2, d)
    t1 = _geometric_tail(inputs.gamma_seq)
    diag = ""
    if not t1.zero and t1.ratio >= 1:
        s1 = math.inf
        diag = f"gamma series tail ratio {t1.ratio:.4g} >= 1: declared divergent"
    else:
        s1 = _series_with_tail(inputs.gamma_seq, lambda k: k ** (d / 2), t1, math.inf)
    t2 = _geometric_tail(inputs.gamma2_seq)
    s2 = _series_with_tail(inputs.gamma2_seq, lambda k: k + 2.0, t2, n)
    gamma_term = 0.0 if s1 == 0 else (cd + inputs.M) * s1
    bracket = gamma_term + s2 + inputs.moment_x + inputs.moment_g
    pref = n ** (-d / 2)
    return BoundResult(n, pref, bracket, pref * bracket, cd, s1, s2, diag)


def exact_bound_inputs(model, delta: float = 1.0, M: float = 0.0, k_max: int = 64, max_lag: int = 64):
    """Bound inputs for a scalar i.i.d. or finite-chain model, all exact."""
    ks = list(range(1, k_max + 1))
    if isinstance(model, IIDModel):
        zero = {k: 0.0 for k in ks}
        g1 = CoefficientSequence("gamma_tilde", zero, "exact")
        g2 = CoefficientSequence("gamma2_tilde", dict(zero), "exact", delta)
    else:
        g1 = coefficient_sequence(model, "gamma_tilde", ks)
        g2 = coefficient_sequence(model, "gamma2_tilde", ks, delta, max_lag)
    sigma2 = scalar_long_run_variance(model)
    lam = lambda_sup(model, max(k_max, 8)).upper
    return BoundInputs(
        delta,
        M,
        g1,
        g2,
        model.abs_moment(2 + delta),
        normal_abs_moment(2 + delta, sigma2),
        lam,
        sigma2,
    )


# ---------------------------------------------------------------------------
# rate fitting


@dataclass
class RateFit:
    ns: np.ndarray
    log_values: np.ndarray
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    dropped: list = field(default_factory=list)


def rate_fit(ns: Sequence[int], estimates: Sequence) -> RateFit:
    """Least squares of ``log value`` on ``log n``.

    ``estimates`` are :class:`DeltaEstimate` objects or plain numbers.
    Nonpositive values are dropped with a warning; at least 4 must remain.
    """
    ns = np.asarray(ns, dtype=float)
    vals = np.array([e.value if isinstance(e, DeltaEstimate) else float(e) for e in estimates])
    if ns.size != vals.size:
        raise ValueError("ns and estimates differ in length")
    if np.any(np.diff(ns) <= 0):
        raise ValueError("ns must be strictly increasing")
    bad = ~(vals > 0)
    dropped = [int(n) for n in ns[bad]]
    if dropped:
        warnings.warn(f"rate_fit: dropping nonpositive estimates at n={dropped}")
    ns, vals = ns[~bad], vals[~bad]
    if ns.size < 4:
        raise ValueError("rate_fit needs at least 4 positive estimates")
    x, y = np.log(ns), np.log(vals)
    slope, se = _ols_slope(x, y)
    intercept = float(np.mean(y - slope * x))
    resid = y - intercept - slope * x
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else 1.0
    return RateFit(ns.astype(int), y, slope, intercept, se, r2, dropped)


# ---------------------------------------------------------------------------
# dominance


@dataclass
class DominanceRow:
    n: int
    delta_hat: float
    stderr: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.delta_hat

    @property
    def ok(self) -> bool:
        return self.delta_hat <= self.bound + 3 * self.stderr


@dataclass
class DominanceReport:
    rows: list[DominanceRow]

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)


def dominance_check(
    inputs: BoundInputs,
    f,
    model,
    ns: Sequence[int],
    reps: int,
    seed: int = 0,
    certificate=None,
    gaussian: GaussianSampler | None = None,
    jobs: int = 1,
) -> DominanceReport:
    """Measured ``Delta_n(f)`` against the bound at each ``n``."""
    if gaussian is None:
        gaussian = GaussianSampler(covariance_series(model))
    rows = []
    for n in ns:
        est = delta_n(f, model, int(n), reps, gaussian, seed, certificate=certificate, jobs=jobs)
        rows.append(DominanceRow(int(n), est.value, est.stderr, bound_b(inputs, int(n)).bound))
    return DominanceReport(rows)
