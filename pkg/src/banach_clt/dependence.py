"""Dependence and mixing coefficients, quantile integrals and summability checks.

Exact values are available for finite Markov chains: every conditional law
given the past is reduced to a conditional law given ``X_0`` (the Markov
property), so each coefficient becomes a finite sum over states.  Suprema
over lags are truncated at ``max_lag`` and the attaining lag is reported.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .generators import (
    FiniteMarkov,
    IIDModel,
    LSVModel,
    lsv_initial_points,
    lsv_map,
    markov_power,
    replicate_rng,
    _cached_ulam,
)
from .laws import DiscreteLaw1D, as_law
from .measure import DiscreteMeasure, signed_cumulative
from .metrics import transport_lp, wasserstein_1d

__all__ = [
    "QuantileFn",
    "quantile_upper",
    "g_inverse",
    "primitive",
    "mixing_integral_tau",
    "mixing_integral_beta",
    "CoefficientSequence",
    "MomentRecord",
    "as_markov",
    "gamma_tilde_exact",
    "a_tilde_exact",
    "b_tilde_exact",
    "gamma2_tilde_exact",
    "tau1_exact",
    "pair_coefficient",
    "tau2_exact",
    "beta2_exact",
    "alpha2_exact",
    "coefficient_sequence",
    "coefficient_mc",
    "ConditionReport",
    "condition_check",
    "tau1_lsv_empirical",
    "y_pmu_law",
    "y_pmu_quantile_condition",
]

KINDS = ("gamma_tilde", "a_tilde", "b_tilde", "gamma2_tilde", "tau1", "tau2", "beta2", "alpha2")


# ---------------------------------------------------------------------------
# quantile machinery


class QuantileFn:
    """Upper-tail quantile ``Q(u) = inf{t >= 0 : P(X > t) <= u}`` of a
    nonnegative discrete law, with the primitive ``x -> int_0^x Q`` and its
    inverse ``G``.

    ``Q`` equals ``levels[j]`` on ``[knots[j], knots[j+1])``; levels decrease.
    """

    def __init__(self, law):
        law = as_law(law)
        if law.atoms[0] < 0:
            raise ValueError("upper-tail quantiles need a nonnegative law")
        self.law = law
        self.levels = law.atoms[::-1].copy()
        self.knots = np.concatenate([[0.0], np.cumsum(law.probs[::-1])])
        self.knots[-1] = 1.0
        seg = self.levels * np.diff(self.knots)
        self.prim_knots = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def mean(self) -> float:
        return float(self.prim_knots[-1])

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.knots, u, side="right") - 1
        # Q vanishes at u = 1 and beyond
        return np.where(u >= 1.0, 0.0, self.levels[np.clip(idx, 0, self.levels.size - 1)])

    def primitive(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return np.interp(x, self.knots, self.prim_knots)

    def g_inverse(self, y):
        """Generalized inverse ``inf{u : primitive(u) >= y}``; 1 past the range."""
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise ValueError("g_inverse needs y >= 0")
        idx = np.searchsorted(self.prim_knots, y, side="left")
        idx = np.clip(idx, 1, self.levels.size)
        lo = self.prim_knots[idx - 1]
        lev = self.levels[idx - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = self.knots[idx - 1] + np.where(lev > 0, (y - lo) / lev, 0.0)
        out = np.where(y <= 0, 0.0, inner)
        return np.where(y > self.mean, 1.0, out)

    def integral_power(self, upper: float, r: float) -> float:
        """``int_0^upper Q(u)^r du``."""
        upper = min(max(float(upper), 0.0), 1.0)
        widths = np.clip(upper - self.knots[:-1], 0.0, np.diff(self.knots))
        return float(np.sum(widths * self.levels**r))

    def integral_power_of_g(self, upper: float, r: float) -> float:
        """``int_0^upper Q(G(u))^r du``.

        ``Q o G`` is constant on each linear piece of the primitive; beyond
        the range ``G = 1`` and ``Q(1) = 0``.
        """
        upper = max(float(upper), 0.0)
        widths = np.clip(upper - self.prim_knots[:-1], 0.0, np.diff(self.prim_knots))
        return float(np.sum(widths * self.levels**r))


def quantile_upper(law, u: float) -> float:
    if not 0 < u < 1:
        raise ValueError("u must lie in (0, 1)")
    return float(QuantileFn(law)(u))


def primitive(law, x: float) -> float:
    return float(QuantileFn(law).primitive(x))


def g_inverse(law, x: float) -> float:
    if x < 0:
        raise ValueError("g_inverse needs x >= 0")
    return float(QuantileFn(law).g_inverse(x))


def mixing_integral_tau(law, tau_value: float, delta: float) -> float:
    """``4 int_0^(tau/2) Q^(1+delta)(G(u)) du``."""
    if tau_value < 0:
        raise ValueError("tau_value must be >= 0")
    return 4.0 * QuantileFn(law).integral_power_of_g(tau_value / 2.0, 1.0 + delta)


def mixing_integral_beta(law, beta_value: float, delta: float) -> float:
    """``int_0^beta Q^(2+delta)(u) du``."""
    if beta_value < 0:
        raise ValueError("beta_value must be >= 0")
    return QuantileFn(law).integral_power(beta_value, 2.0 + delta)


# ---------------------------------------------------------------------------
# coefficient containers


@dataclass
class CoefficientSequence:
    kind: str
    values: dict[int, float]
    provenance: str = "exact"
    delta: float | None = None
    params: dict = field(default_factory=dict)
    argmax: dict[int, int] = field(default_factory=dict)
    stderr: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in self.values.values()):
            raise ValueError("coefficients are nonnegative")

    @property
    def ks(self) -> list[int]:
        return sorted(self.values)

    def array(self) -> tuple[np.ndarray, np.ndarray]:
        ks = self.ks
        return np.array(ks), np.array([self.values[k] for k in ks])

    def to_csv(self, path, comments: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            fh.write(f"# kind={self.kind}\n")
            if self.delta is not None:
                fh.write(f"# delta={self.delta!r}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "value", "provenance", "argmax_lag"])
            for k in self.ks:
                w.writerow([k, format(self.values[k], ".17g"), self.provenance, self.argmax.get(k, "")])


@dataclass
class MomentRecord:
    abs_moment_2delta: float
    g_moment: float
    lam: float

    def __post_init__(self):
        if min(self.abs_moment_2delta, self.g_moment, self.lam) < 0:
            raise ValueError("moments are nonnegative")


# ---------------------------------------------------------------------------
# exact coefficients for finite chains


def as_markov(model) -> FiniteMarkov:
    """View a discrete i.i.d. model as a chain whose rows all equal the law."""
    if isinstance(model, FiniteMarkov):
        return model
    if isinstance(model, IIDModel):
        if model.marginal == "rademacher":
            atoms, probs = (-1.0, 1.0), (0.5, 0.5)
        elif model.marginal == "discrete":
            atoms, probs = model.params
        else:
            raise TypeError("exact coefficients need a finitely supported marginal")
        pi = np.asarray(probs, dtype=float)
        P = np.tile(pi, (pi.size, 1))
        return FiniteMarkov(atoms, P, stationary=pi, name=model.tag)
    raise TypeError(f"exact coefficients need a finite chain, got {type(model).__name__}")


def _require_centered(m: FiniteMarkov) -> None:
    if not m.is_centered(1e-10):
        raise ValueError(f"dependence: chain {m.name!r} is not centered (mean {m.mean:.3g})")


def gamma_tilde_exact(model, k: int) -> float:
    """``E|X_0 E[X_k | X_0]|``."""
    m = as_markov(model)
    _require_centered(m)
    cond = markov_power(m, k) @ m.states
    return float(m.stationary @ (np.abs(m.states) * np.abs(cond)))


def a_tilde_exact(model, k: int, delta: float, i: int) -> float:
    """``E(|X_-i|^delta |E[X_0 X_k | X_0] - E X_0 X_k|)`` at one lag ``i``."""
    m = as_markov(model)
    s, pi = m.states, m.stationary
    phi = s * (markov_power(m, k) @ s)  # E[X_0 X_k | X_0 = j]
    dev = np.abs(phi - pi @ phi)
    # joint law of (X_-i, X_0) is diag(pi) P^i
    joint = pi[:, None] * markov_power(m, i)
    return float(np.abs(s) ** delta @ joint @ dev)


def b_tilde_exact(model, k: int, delta: float, j: int) -> float:
    """``E(|X_0|^delta |E[X_k X_(k+j) | X_0] - E X_k X_(k+j)|)`` at one lag ``j``."""
    m = as_markov(model)
    s, pi = m.states, m.stationary
    inner = s * (markov_power(m, j) @ s)  # E[X_k X_(k+j) | X_k = a]
    cond = markov_power(m, k) @ inner
    dev = np.abs(cond - pi @ inner)
    return float(pi @ (np.abs(s) ** delta * dev))


def gamma2_tilde_exact(model, k: int, delta: float, max_lag: int = 64, return_argmax=False):
    """``max(a~(k), b~(k))`` with both suprema truncated at ``max_lag``."""
    m = as_markov(model)
    _require_centered(m)
    a_vals = [a_tilde_exact(m, k, delta, i) for i in range(max_lag + 1)]
    b_vals = [b_tilde_exact(m, k, delta, j) for j in range(max_lag + 1)]
    ia, ib = int(np.argmax(a_vals)), int(np.argmax(b_vals))
    if a_vals[ia] >= b_vals[ib]:
        val, arg = a_vals[ia], ("a", ia)
    else:
        val, arg = b_vals[ib], ("b", ib)
    return (float(val), arg) if return_argmax else float(val)


def _w1_on_states(p: np.ndarray, q: np.ndarray, states: np.ndarray) -> np.ndarray:
    """W1 between laws (rows of ``p``) and ``q`` carried by ``states``."""
    order = np.argsort(states)
    s = states[order]
    cp = np.cumsum(np.atleast_2d(p)[:, order], axis=1)[:, :-1]
    cq = np.cumsum(q[order])[:-1]
    return np.abs(cp - cq) @ np.diff(s)


def tau1_exact(model, k: int) -> float:
    """``sum_j pi_j W1(P^k(j, .), pi)``."""
    m = as_markov(model)
    Pk = markov_power(m, k)
    return float(m.stationary @ _w1_on_states(Pk, m.stationary, m.states))


def _pair_laws(m: FiniteMarkov, k: int, l: int):
    """Conditional laws of ``(X_k, X_(k+l))`` given each ``X_0`` and the
    stationary pair law, as arrays of shape ``(d, d, d)`` and ``(d, d)``."""
    Pk, Pl = markov_power(m, k), markov_power(m, l)
    cond = Pk[:, :, None] * Pl[None, :, :]
    marg = m.stationary[:, None] * Pl
    return cond, marg


def _pair_tau(pi, cond, marg, states) -> float:
    d = states.size
    u = np.repeat(states, d)
    v = np.tile(states, d)
    C = 0.5 * (np.abs(u[:, None] - u[None, :]) + np.abs(v[:, None] - v[None, :]))
    q = marg.ravel()
    total = 0.0
    for j in range(pi.size):
        if pi[j] == 0:
            continue
        total += pi[j] * transport_lp(cond[j].ravel(), q, C)
    return total


def _pair_beta(pi, cond, marg) -> float:
    return float(pi @ np.abs(cond - marg[None]).sum(axis=(1, 2)))


def _pair_alpha(pi, cond, marg, states) -> float:
    order = np.argsort(states)
    thr = states[order]
    ind = (states[:, None] <= thr[None, :]).astype(float)  # (state, threshold)
    F = marg.sum(axis=1) @ ind  # marginal cdf of first coordinate
    Fy = marg.sum(axis=0) @ ind
    A = ind - F[None, :]
    B = ind - Fy[None, :]
    c = np.einsum("ax,jab,by->jxy", A, cond, B)
    e = np.einsum("ax,ab,by->xy", A, marg, B)
    return float(np.max(np.einsum("j,jxy->xy", pi, np.abs(c - e[None]))))


def pair_coefficient(model, kind: str, k: int, l: int) -> float:
    """Per-lag term of ``tau2`` (pair part), ``beta2`` or ``alpha2``."""
    m = as_markov(model)
    cond, marg = _pair_laws(m, k, l)
    if kind == "tau2":
        return _pair_tau(m.stationary, cond, marg, m.states)
    if kind == "beta2":
        return _pair_beta(m.stationary, cond, marg)
    if kind == "alpha2":
        return _pair_alpha(m.stationary, cond, marg, m.states)
    raise ValueError(f"unknown pair coefficient {kind!r}")


def _sup_over_lags(m: FiniteMarkov, kind: str, k: int, max_lag: int):
    best, arg = -1.0, 0
    prev = None
    stable = 0
    for l in range(max_lag + 1):
        cond, marg = _pair_laws(m, k, l)
        if prev is not None:
            change = max(np.max(np.abs(cond - prev[0])), np.max(np.abs(marg - prev[1])))
            # identical pair laws give identical terms; stop once they freeze
            stable = stable + 1 if change < 1e-15 else 0
            if stable >= 3:
                break
        prev = (cond, marg)
        if kind == "tau2":
            val = _pair_tau(m.stationary, cond, marg, m.states)
        elif kind == "beta2":
            val = _pair_beta(m.stationary, cond, marg)
        else:
            val = _pair_alpha(m.stationary, cond, marg, m.states)
        if val > best:
            best, arg = val, l
    return best, arg


def tau2_exact(model, k: int, max_lag: int = 64, return_argmax=False):
    m = as_markov(model)
    pair, arg = _sup_over_lags(m, "tau2", k, max_lag)
    t1 = tau1_exact(m, k)
    val = max(t1, pair)
    return (val, arg) if return_argmax else val


def beta2_exact(model, k: int, max_lag: int = 64, return_argmax=False):
    """``sup_l E sum |P((X_k, X_(k+l)) | X_0) - P(X_k, X_(k+l))|`` (no 1/2)."""
    m = as_markov(model)
    val, arg = _sup_over_lags(m, "beta2", k, max_lag)
    return (val, arg) if return_argmax else val


def alpha2_exact(model, k: int, max_lag: int = 64, return_argmax=False):
    m = as_markov(model)
    val, arg = _sup_over_lags(m, "alpha2", k, max_lag)
    return (val, arg) if return_argmax else val


def coefficient_sequence(
    model, kind: str, ks: Sequence[int], delta: float = 1.0, max_lag: int = 64
) -> CoefficientSequence:
    """Exact coefficients of one ``kind`` at each lag in ``ks``."""
    values, argmax = {}, {}
    for k in ks:
        k = int(k)
        if kind == "gamma_tilde":
            values[k] = gamma_tilde_exact(model, k)
        elif kind == "gamma2_tilde":
            values[k], arg = gamma2_tilde_exact(model, k, delta, max_lag, return_argmax=True)
            argmax[k] = arg[1]
        elif kind == "a_tilde":
            vals = [a_tilde_exact(model, k, delta, i) for i in range(max_lag + 1)]
            argmax[k] = int(np.argmax(vals))
            values[k] = float(max(vals))
        elif kind == "b_tilde":
            vals = [b_tilde_exact(model, k, delta, j) for j in range(max_lag + 1)]
            argmax[k] = int(np.argmax(vals))
            values[k] = float(max(vals))
        elif kind == "tau1":
            values[k] = tau1_exact(model, k)
        elif kind in ("tau2", "beta2", "alpha2"):
            fn = {"tau2": tau2_exact, "beta2": beta2_exact, "alpha2": alpha2_exact}[kind]
            values[k], argmax[k] = fn(model, k, max_lag, return_argmax=True)
        else:
            raise ValueError(f"unknown coefficient kind {kind!r}")
        values[k] = max(float(values[k]), 0.0)
    uses_delta = kind in ("gamma2_tilde", "a_tilde", "b_tilde")
    return CoefficientSequence(
        kind,
        values,
        "exact",
        delta if uses_delta else None,
        {"model": getattr(model, "tag", ""), "max_lag": max_lag},
        argmax,
    )


# ---------------------------------------------------------------------------
# Monte Carlo cross-checks


def _simulate_indices(m: FiniteMarkov, length: int, n: int, rng) -> np.ndarray:
    cum = np.cumsum(m.transition, axis=1)
    cum[:, -1] = 1.0
    idx = np.empty((n, length), dtype=np.int64)
    idx[:, 0] = rng.choice(m.size, size=n, p=m.stationary)
    u = rng.random((n, length - 1))
    for t in range(1, length):
        idx[:, t] = (u[:, t - 1, None] >= cum[idx[:, t - 1]]).sum(axis=1)
    return idx


def _mc_estimate(m: FiniteMarkov, kind: str, k: int, lag: int, delta: float, idx) -> float:
    s, d = m.states, m.size
    if kind == "gamma_tilde":
        x0, xk = idx[:, 0], idx[:, k]
        cnt = np.bincount(x0, minlength=d)
        cm = np.bincount(x0, weights=s[xk], minlength=d) / np.maximum(cnt, 1)
        return float(np.sum(cnt / idx.shape[0] * np.abs(s) * np.abs(cm)))
    if kind == "a_tilde":
        xm, x0, xk = idx[:, 0], idx[:, lag], idx[:, lag + k]
        cnt = np.bincount(x0, minlength=d)
        prod = s[x0] * s[xk]
        cm = np.bincount(x0, weights=prod, minlength=d) / np.maximum(cnt, 1)
        return float(np.mean(np.abs(s[xm]) ** delta * np.abs(cm[x0] - prod.mean())))
    if kind == "b_tilde":
        x0, xk, xkj = idx[:, 0], idx[:, k], idx[:, k + lag]
        cnt = np.bincount(x0, minlength=d)
        prod = s[xk] * s[xkj]
        cm = np.bincount(x0, weights=prod, minlength=d) / np.maximum(cnt, 1)
        return float(np.mean(np.abs(s[x0]) ** delta * np.abs(cm[x0] - prod.mean())))
    x0 = idx[:, 0]
    n = idx.shape[0]
    pi_hat = np.bincount(x0, minlength=d) / n
    if kind == "tau1":
        xk = idx[:, k]
        joint = np.zeros((d, d))
        np.add.at(joint, (x0, xk), 1.0)
        cond = joint / np.maximum(joint.sum(axis=1, keepdims=True), 1)
        marg = joint.sum(axis=0) / n
        return float(pi_hat @ _w1_on_states(cond, marg, s))
    xk, xkl = idx[:, k], idx[:, k + lag]
    joint = np.zeros((d, d, d))
    np.add.at(joint, (x0, xk, xkl), 1.0)
    cond = joint / np.maximum(joint.sum(axis=(1, 2), keepdims=True), 1)
    marg = joint.sum(axis=0) / n
    if kind == "tau2":
        return _pair_tau(pi_hat, cond, marg, s)
    if kind == "beta2":
        return _pair_beta(pi_hat, cond, marg)
    if kind == "alpha2":
        return _pair_alpha(pi_hat, cond, marg, s)
    raise ValueError(f"no Monte Carlo estimator for {kind!r}")


def coefficient_mc(
    model,
    kind: str,
    k: int,
    lag: int = 0,
    n_samples: int = 1_000_000,
    seed: int = 0,
    delta: float = 1.0,
    batches: int = 20,
) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of one coefficient term.

    Sup-type kinds are estimated at the fixed ``lag`` (the lag argument of
    the supremum), since a Monte Carlo supremum is biased upward.  ``tau2``
    here is the pair term only.  The standard error comes from the spread of
    ``batches`` independent batch estimates.
    """
    m = as_markov(model)
    length = k + lag + 1
    per = n_samples // batches
    ests = []
    all_idx = []
    for b in range(batches):
        idx = _simulate_indices(m, length, per, replicate_rng(seed, b))
        all_idx.append(idx)
        ests.append(_mc_estimate(m, kind, k, lag, delta, idx))
    full = _mc_estimate(m, kind, k, lag, delta, np.concatenate(all_idx))
    return full, float(np.std(ests, ddof=1) / math.sqrt(batches))


# ---------------------------------------------------------------------------
# summability conditions


@dataclass
class ConditionReport:
    variant: str
    ks: np.ndarray
    terms: np.ndarray
    partial_sums: np.ndarray
    verdict: str  # converged | diverged | inconclusive
    tail_exponent: float = math.nan
    tail_exponent_stderr: float = math.nan
    geometric_ratio: float = math.nan
    notes: list[str] = field(default_factory=list)

    @property
    def converged_flag(self) -> bool:
        return self.verdict == "converged"


def _series_terms(coefs: CoefficientSequence, law, delta: float, variant: str, r):
    ks, vals = coefs.array()
    ks = ks.astype(float)
    needs_r = variant in ("tau_i", "tau_ii", "beta_i", "beta_ii")
    if needs_r and r is None:
        raise ValueError(f"variant {variant} needs r")
    if variant == "tau_i":
        return ks ** (1 + (2 + 2 * delta) / (r - 2 - delta)) * vals if math.isfinite(r) else ks * vals
    if variant == "tau_ii":
        return ks * vals ** (1 - (1 + delta) / (r - 1))
    if variant == "beta_i":
        return ks ** (1 + (4 + 2 * delta) / (r - 2 - delta)) * vals if math.isfinite(r) else ks * vals
    if variant == "beta_ii":
        return ks * vals ** (1 - (2 + delta) / r)
    if variant in ("tau_iii", "beta_iii"):
        return ks * vals
    if variant == "tau_integral":
        Q = QuantileFn(law)
        return ks * np.array([Q.integral_power_of_g(v / 2, 1 + delta) for v in vals])
    if variant == "beta_integral":
        Q = QuantileFn(law)
        power = 2 + delta if r is None else r
        return ks * np.array([Q.integral_power(v, power) for v in vals])
    if variant == "plain":
        return vals
    raise ValueError(f"unknown variant {variant!r}")


def condition_check(
    coefs: CoefficientSequence,
    law=None,
    delta: float = 1.0,
    variant: str = "tau_i",
    r: float | None = None,
    tail_points: int = 8,
) -> ConditionReport:
    """Partial sums of one summability series and a tail verdict.

    The summand's tail is fitted as ``C k^e`` (log-log least squares over the
    last ``tail_points`` positive terms); the series is declared convergent
    when ``e + 2 se < -1``, divergent when ``e - 2 se > -1`` and
    inconclusive otherwise.  The ``*_iii`` variants instead require a
    geometric ratio below 1, with the log-linear fit tighter than the
    log-log one.
    """
    terms = _series_terms(coefs, law, delta, variant, r)
    ks = np.array(coefs.ks)
    partial = np.cumsum(terms)
    rep = ConditionReport(variant, ks, terms, partial, "inconclusive")
    if ks.size < 4:
        rep.notes.append("fewer than 4 coefficients: no tail fit")
        return rep
    tail_k, tail_t = ks[-tail_points:], terms[-tail_points:]
    if np.all(tail_t == 0):
        rep.verdict = "converged"
        rep.notes.append("tail terms vanish")
        return rep
    pos = tail_t > 0
    if pos.sum() < 3:
        rep.notes.append("too few positive tail terms")
        return rep
    lk, lt = np.log(tail_k[pos]), np.log(tail_t[pos])
    slope, se = _ols_slope(lk, lt)
    g_slope, _ = _ols_slope(tail_k[pos].astype(float), lt)
    rep.tail_exponent, rep.tail_exponent_stderr = slope, se
    rep.geometric_ratio = math.exp(g_slope)
    if variant in ("tau_iii", "beta_iii"):
        raw = coefs.array()[1][-tail_points:]
        rawpos = raw > 0
        if rawpos.sum() >= 3:
            kk = ks[-tail_points:][rawpos].astype(float)
            lr = np.log(raw[rawpos])
            gr, gse = _ols_slope(kk, lr)
            rep.geometric_ratio = math.exp(gr)
            # any decreasing tail has a fitted ratio below 1; also ask that
            # the geometric fit beat the power-law fit
            geo_sse = _ols_sse(kk, lr)
            pow_sse = _ols_sse(np.log(kk), lr)
            if gr + 2 * gse < 0 and geo_sse <= pow_sse:
                rep.verdict = "converged"
            elif geo_sse > pow_sse:
                rep.notes.append("tail looks polynomial rather than geometric")
        return rep
    if slope + 2 * se < -1:
        rep.verdict = "converged"
    elif slope - 2 * se > -1:
        rep.verdict = "diverged"
    return rep


def _ols_sse(x: np.ndarray, y: np.ndarray) -> float:
    slope, _ = _ols_slope(x, y)
    resid = y - y.mean() - slope * (x - x.mean())
    return float(resid @ resid)


def _ols_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xc
    dof = x.size - 2
    se = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else math.inf
    return slope, se


# ---------------------------------------------------------------------------
# intermittent map


def tau1_lsv_empirical(
    gamma: float,
    k_list: Sequence[int],
    n_bins: int = 64,
    n_mc: int = 100_000,
    seed: int = 0,
    burn_in: int = 1000,
    m_bins: int = 1024,
) -> CoefficientSequence:
    """Binned Monte Carlo estimate of ``tau1(k)`` for forward LSV orbits.

    Starting points are drawn from the Ulam stationary density and pushed
    through ``burn_in`` iterations, then grouped into ``n_bins`` bins of
    equal empirical mass.  For each lag the conditional law of ``T^k x`` in a
    bin is compared in W1 with the pooled law of ``T^k x``.  The estimate is
    biased upward by the binning and by the finite per-bin sample; the
    ``stderr`` field carries the permutation noise floor at each lag.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if n_bins < 16:
        raise ValueError("n_bins must be >= 16")
    model = LSVModel(gamma, burn_in=burn_in, m_bins=m_bins)
    rng = replicate_rng(seed, 0)
    x0 = lsv_initial_points(model, rng, n_mc)
    edges = np.quantile(x0, np.linspace(0, 1, n_bins + 1))
    bins = np.clip(np.searchsorted(edges, x0, side="right") - 1, 0, n_bins - 1)
    shuffled = replicate_rng(seed, 1).permutation(bins)
    counts = np.bincount(bins, minlength=n_bins)
    weights = counts / n_mc
    ks = sorted(set(int(k) for k in k_list))
    values, floor = {}, {}
    x = x0.copy()
    t = 0
    for k in ks:
        while t < k:
            x = lsv_map(x, gamma)
            t += 1
        pooled = np.sort(x)
        values[k] = _binned_w1(x, bins, weights, pooled, n_bins)
        floor[k] = _binned_w1(x, shuffled, weights, pooled, n_bins)
    params = {
        "gamma": gamma,
        "n_bins": n_bins,
        "n_mc": n_mc,
        "seed": seed,
        "burn_in": burn_in,
        "m_bins": m_bins,
        "min_bin_count": int(counts.min()),
    }
    if counts.min() < 100:
        params["flag"] = "insufficient per-bin samples"
    return CoefficientSequence("tau1", values, "estimated", None, params, {}, floor)


def _binned_w1(x, bins, weights, pooled_sorted, n_bins) -> float:
    total = 0.0
    for b in range(n_bins):
        if weights[b] == 0:
            continue
        total += weights[b] * wasserstein_1d(x[bins == b], pooled_sorted, 1)
    return total


# ---------------------------------------------------------------------------
# empirical-process summability through Y_{p, mu}


def y_pmu_law(mu: DiscreteMeasure, law_y, p: float) -> DiscreteLaw1D:
    """Law of ``|F_mu(Y_0)|^(1/p)``."""
    law_y = as_law(law_y)
    return DiscreteLaw1D(np.abs(signed_cumulative(mu, law_y.atoms)) ** (1.0 / p), law_y.probs)


@dataclass
class YpmuReport:
    law: DiscreteLaw1D
    moment: float
    condition: ConditionReport
    truncated: bool
    notes: list[str] = field(default_factory=list)


def y_pmu_quantile_condition(
    mu: DiscreteMeasure,
    law_y,
    p: float,
    beta_seq: CoefficientSequence,
    r: float | None = None,
) -> YpmuReport:
    """Evaluate ``sum_k k int_0^beta(k) Q_Y^r`` for ``Y = |F_mu(Y_0)|^(1/p)``.

    ``r`` defaults to ``min(p, 3)``.
    """
    law_y = as_law(law_y)
    if r is None:
        r = min(p, 3.0)
    lawp = y_pmu_law(mu, law_y, p)
    notes = []
    truncated = bool(mu.truncated)
    if mu.truncated:
        notes.append("measure is a truncation: F_mu saturates at the grid edge")
    if law_y.atoms[0] < mu.points[0] or law_y.atoms[-1] > mu.points[-1]:
        truncated = True
        notes.append("Y has mass outside the grid range")
    cond = condition_check(beta_seq, lawp, variant="beta_integral", r=r)
    return YpmuReport(lawp, lawp.abs_moment(r), cond, truncated, notes)
