"""Distances between laws: 1-D Wasserstein, a transport LP oracle, Monte
Carlo smooth-functional discrepancies and dictionary lower bounds for the
Zolotarev distance."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .frechet import ClassCheck, SmoothTestFunction, abs_power_function, signed_power_function
from .laws import DiscreteLaw1D

__all__ = [
    "wasserstein_1d",
    "transport_lp",
    "ot_lp_oracle",
    "DeltaEstimate",
    "UncertifiedFunctionError",
    "delta_n",
    "ZolotarevBound",
    "zolotarev_lower",
    "default_dictionary",
    "wasserstein_rate_target",
]


def _quantile_arrays(a) -> tuple[np.ndarray, np.ndarray]:
    """Sorted atoms and cumulative probabilities of a law or a raw sample."""
    if isinstance(a, DiscreteLaw1D):
        cum = np.cumsum(a.probs)
        cum[-1] = 1.0
        return a.atoms, cum
    x = np.sort(np.asarray(a, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("wasserstein_1d: empty input")
    return x, np.arange(1, x.size + 1) / x.size


def wasserstein_1d(a, b, p: float = 1.0) -> float:
    """``W_p`` through the quantile coupling ``(int_0^1 |F_a^-1 - F_b^-1|^p)^(1/p)``.

    Inputs are :class:`DiscreteLaw1D` instances or samples (equal weights).
    Both quantile functions are step functions, so the integral is an exact
    sum over the merged breakpoints.
    """
    if p < 1:
        raise ValueError("wasserstein_1d needs p >= 1")
    xa, ca = _quantile_arrays(a)
    xb, cb = _quantile_arrays(b)
    if xa.size == xb.size and not isinstance(a, DiscreteLaw1D) and not isinstance(b, DiscreteLaw1D):
        diff = np.abs(xa - xb)
        return float(np.mean(diff**p) ** (1.0 / p))
    knots = np.union1d(ca, cb)
    widths = np.diff(np.concatenate([[0.0], knots]))
    qa = xa[np.minimum(np.searchsorted(ca, knots, side="left"), xa.size - 1)]
    qb = xb[np.minimum(np.searchsorted(cb, knots, side="left"), xb.size - 1)]
    return float(np.sum(widths * np.abs(qa - qb) ** p) ** (1.0 / p))


_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def transport_lp(p_mass, q_mass, cost) -> float:
    """Optimal transport cost between mass vectors under ``cost[i, j]``."""
    p_mass = np.asarray(p_mass, dtype=float)
    q_mass = np.asarray(q_mass, dtype=float)
    cost = np.asarray(cost, dtype=float)
    if abs(p_mass.sum() - q_mass.sum()) > 1e-9:
        raise ValueError("transport_lp: marginals carry different total mass")
    rows, cols = np.flatnonzero(p_mass > 0), np.flatnonzero(q_mass > 0)
    if rows.size == 1 or cols.size == 1:
        # a single source or sink leaves exactly one feasible plan
        plan = np.outer(p_mass[rows], q_mass[cols]) / max(p_mass.sum(), 1e-300)
        return float(np.sum(plan * cost[np.ix_(rows, cols)]))
    c = cost[np.ix_(rows, cols)]
    r, s = rows.size, cols.size
    A = np.vstack([np.kron(np.eye(r), np.ones(s)), np.kron(np.ones(r), np.eye(s))])
    b = np.concatenate([p_mass[rows], q_mass[cols]])
    # one equality is redundant; dropping it keeps the system full rank
    res = linprog(c.ravel(), A_eq=A[:-1], b_eq=b[:-1], bounds=(0, None), method="highs", options=_LP_OPTIONS)
    if res.status != 0:
        raise RuntimeError(f"transport_lp: solver failed ({res.message})")
    return float(res.fun)


def ot_lp_oracle(a: DiscreteLaw1D, b: DiscreteLaw1D, p: float = 1.0) -> float:
    """``W_p`` from the transport linear program on ``|x_i - y_j|^p``."""
    if a.size > 64 or b.size > 64:
        raise ValueError("ot_lp_oracle is meant for at most 64 atoms per law")
    cost = np.abs(a.atoms[:, None] - b.atoms[None, :]) ** p
    return max(transport_lp(a.probs, b.probs, cost), 0.0) ** (1.0 / p)


def wasserstein_rate_target(delta: float) -> float:
    """Reference log-log slope ``-delta / (4 + 2 delta)``."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return -delta / (4.0 + 2.0 * delta)


# ---------------------------------------------------------------------------
# smooth-functional discrepancy


class UncertifiedFunctionError(ValueError):
    """A test function was used without a passing class certificate or waiver."""


@dataclass
class DeltaEstimate:
    n: int
    f: str
    value: float
    stderr: float
    reps: int
    seed: int
    signed: float = 0.0
    model_mean: float = 0.0
    gauss_mean: float = 0.0
    waived: bool = False
    coupling: str = "independent"

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


def _chunk_size(n: int, reps: int, budget: int = 1 << 22) -> int:
    return max(1, min(reps, budget // max(n, 1)))


def _moments(vals: np.ndarray) -> tuple[float, float, int]:
    return float(np.sum(vals)), float(np.sum(vals * vals)), vals.size


def _run_chunks(task: Callable[[int, int], tuple], sizes: Sequence[int], jobs: int):
    """Evaluate ``task(index, size)`` for each chunk; order of results is fixed."""
    if jobs <= 1:
        return [task(i, s) for i, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(lambda a: task(*a), enumerate(sizes)))


def _combine(parts) -> tuple[float, float]:
    s = sum(p[0] for p in parts)
    ss = sum(p[1] for p in parts)
    cnt = sum(p[2] for p in parts)
    mean = s / cnt
    var = max(ss / cnt - mean * mean, 0.0) * cnt / max(cnt - 1, 1)
    return mean, var


def _split(total: int, size: int) -> list[int]:
    full, rest = divmod(total, size)
    return [size] * full + ([rest] if rest else [])


def delta_n(
    f: SmoothTestFunction,
    model,
    n: int,
    reps: int,
    gaussian,
    seed: int = 0,
    field_builder: Callable[[np.ndarray], np.ndarray] | None = None,
    measure=None,
    certificate: ClassCheck | None = None,
    waive: bool = False,
    gauss_reps: int | None = None,
    coupling: str = "independent",
    jobs: int = 1,
) -> DeltaEstimate:
    """Monte Carlo ``|E f(S_n / sqrt n) - E f(G)|``.

    For scalar models ``S_n`` is the centered partial sum; with a
    ``field_builder`` (mapping paths of shape ``(reps, n)`` to normalized
    fields of shape ``(reps, m)``) it is the empirical field in
    ``L^p(measure)``.  Gaussian draws come from stream ``(seed, 2, chunk)``
    for every ``n``, so estimates across an ``n`` grid share them.

    ``coupling="quantile"`` (i.i.d. Rademacher only) drives ``S_n`` and ``G``
    by one common uniform through their quantile functions, which removes
    most of the Monte Carlo noise in the difference.
    """
    from .generators import IIDModel, simulate_batch, replicate_rng

    if certificate is None or not certificate.passed:
        if not waive:
            raise UncertifiedFunctionError(
                f"metrics: {f.label} has no passing class certificate (pass waive=True to override)"
            )
    if reps < 100:
        raise ValueError("delta_n needs reps >= 100")
    gauss_reps = reps if gauss_reps is None else gauss_reps

    def fval(x):
        return f.evaluate(x, measure) if f.kind == "psi_power" else f.evaluate(x)

    if coupling == "quantile":
        if not (isinstance(model, IIDModel) and model.marginal == "rademacher"):
            raise ValueError("quantile coupling is implemented for i.i.d. Rademacher only")
        from scipy.stats import binom, norm

        def task(i, size):
            u = replicate_rng(seed, 3, i).random(size)
            s = (2.0 * binom.ppf(u, n, 0.5) - n) / math.sqrt(n)
            g = norm.ppf(u)
            fs, fg = fval(s), fval(g)
            return _moments(fs - fg) + _moments(fs)[:2] + _moments(fg)[:2]

        parts = _run_chunks(task, _split(reps, 1 << 20), jobs)
        d_mean, d_var = _combine([p[:3] for p in parts])
        m_mean = sum(p[3] for p in parts) / reps
        g_mean = sum(p[5] for p in parts) / reps
        return DeltaEstimate(
            n, f.label, abs(d_mean), math.sqrt(d_var / reps), reps, seed, d_mean, m_mean, g_mean,
            certificate is None or not certificate.passed, "quantile",
        )

    if coupling != "independent":
        raise ValueError(f"unknown coupling {coupling!r}")
    center = 0.0
    if field_builder is None:
        m = getattr(model, "mean", 0.0)
        center = float(m() if callable(m) else m)

    def model_task(i, size):
        paths = simulate_batch(model, n, size, replicate_rng(seed, 1, n, i))
        if field_builder is None:
            x = (paths.sum(axis=1) - n * center) / math.sqrt(n)
        else:
            x = field_builder(paths)
        return _moments(fval(x))

    def gauss_task(i, size):
        return _moments(fval(gaussian.sample(size, replicate_rng(seed, 2, i))))

    chunk = _chunk_size(n, reps)
    m_mean, m_var = _combine(_run_chunks(model_task, _split(reps, chunk), jobs))
    g_mean, g_var = _combine(_run_chunks(gauss_task, _split(gauss_reps, 1 << 18), jobs))
    diff = m_mean - g_mean
    se = math.sqrt(m_var / reps + g_var / gauss_reps)
    return DeltaEstimate(
        n, f.label, abs(diff), se, reps, seed, diff, m_mean, g_mean,
        certificate is None or not certificate.passed,
    )


# ---------------------------------------------------------------------------
# Zolotarev lower bounds


@dataclass
class ZolotarevBound:
    value: float
    stderr: float
    best: str
    per_function: dict = field(default_factory=dict)
    note: str = "dictionary lower bound"


def default_dictionary(delta: float = 1.0) -> list[SmoothTestFunction]:
    """Scalar functions vanishing to second order at 0 whose second
    derivative is ``delta``-Hoelder with constant 1."""
    r = 2.0 + delta
    c = r * (r - 1.0)
    return [
        abs_power_function(r, 1.0 / c, name=f"abs{r:g}"),
        # sgn(x)|x|^delta has Hoelder constant 2^(1-delta)
        signed_power_function(r, 1.0 / (c * 2.0 ** (1.0 - delta)), name=f"signed{r:g}"),
    ]


def zolotarev_lower(
    dictionary: Sequence[SmoothTestFunction],
    sampler_a: Callable,
    sampler_b: Callable,
    reps: int,
    seed: int = 0,
) -> ZolotarevBound:
    """``max_f |E f(A) - E f(B)|`` over a dictionary: a lower bound only.

    ``sampler_a(rng, size)`` and ``sampler_b(rng, size)`` return scalar
    samples.  All dictionary members are evaluated on the same draws.
    """
    from .generators import replicate_rng

    if not dictionary:
        raise ValueError("zolotarev_lower needs a nonempty dictionary")
    for f in dictionary:
        if not f.is_scalar:
            raise ValueError("dictionary members must be scalar")
        if any(abs(v) > 0 for v in f.derivatives_at_zero()):
            raise ValueError(f"metrics: {f.label} does not vanish to second order at 0")
    a = np.asarray(sampler_a(replicate_rng(seed, 0), reps), dtype=float)
    b = np.asarray(sampler_b(replicate_rng(seed, 1), reps), dtype=float)
    best, best_se, best_name = -1.0, 0.0, ""
    per = {}
    for f in dictionary:
        fa, fb = f.evaluate(a), f.evaluate(b)
        d = abs(float(fa.mean() - fb.mean()))
        se = math.sqrt(fa.var(ddof=1) / a.size + fb.var(ddof=1) / b.size)
        per[f.label] = (d, se)
        if d > best:
            best, best_se, best_name = d, se, f.label
    if any(math.isnan(v[0]) for v in per.values()):
        warnings.warn("zolotarev_lower: NaN in dictionary evaluation")
    return ZolotarevBound(best, best_se, best_name, per)
