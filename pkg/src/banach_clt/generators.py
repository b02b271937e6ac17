"""Stationary real-valued sequences: i.i.d. draws, finite Markov chains and
the Liverani-Saussol-Vaienti intermittent map.

Every random quantity is driven by :func:`replicate_rng`, which derives an
independent stream from ``(seed, index)`` so that replicate sets do not
depend on evaluation order or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "IIDModel",
    "FiniteMarkov",
    "LSVModel",
    "SamplePath",
    "Model",
    "ConvergenceError",
    "replicate_rng",
    "lsv_step",
    "lsv_map",
    "simulate",
    "simulate_batch",
    "ulam_density",
    "UlamDensity",
    "markov_power",
    "two_state_chain",
    "reference_three_state_chain",
    "write_path_csv",
]


class ConvergenceError(RuntimeError):
    pass


def replicate_rng(seed: int, *index: int) -> np.random.Generator:
    """Generator for stream ``index`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(index)))


# ---------------------------------------------------------------------------
# models

_MARGINALS = ("rademacher", "uniform", "discrete", "standard_normal")


@dataclass(frozen=True)
class IIDModel:
    """i.i.d. sequence with one of a few fixed marginals.

    ``params`` is ``(a, b)`` for uniform and ``(atoms, probs)`` for discrete.
    """

    marginal: str
    params: tuple = ()

    def __post_init__(self):
        if self.marginal not in _MARGINALS:
            raise ValueError(f"unknown marginal {self.marginal!r}")
        if self.marginal == "uniform":
            a, b = self.params or (0.0, 1.0)
            if not b > a:
                raise ValueError("uniform(a, b) needs b > a")
            object.__setattr__(self, "params", (float(a), float(b)))
        if self.marginal == "discrete":
            atoms, probs = self.params
            atoms = tuple(float(a) for a in atoms)
            probs = tuple(float(p) for p in probs)
            if len(atoms) != len(probs) or not atoms:
                raise ValueError("discrete marginal needs matching atoms and probs")
            if any(p < 0 for p in probs) or abs(sum(probs) - 1) > 1e-12:
                raise ValueError("discrete probs must be nonnegative and sum to 1")
            object.__setattr__(self, "params", (atoms, probs))

    @property
    def tag(self) -> str:
        if self.marginal == "uniform":
            return f"iid:uniform:a={self.params[0]!r},b={self.params[1]!r}"
        if self.marginal == "discrete":
            a, p = self.params
            return "iid:discrete:atoms=" + ";".join(map(repr, a)) + ",probs=" + ";".join(map(repr, p))
        return f"iid:{self.marginal}"

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.marginal == "rademacher":
            return 2.0 * rng.integers(0, 2, size=shape) - 1.0
        if self.marginal == "uniform":
            a, b = self.params
            return rng.uniform(a, b, size=shape)
        if self.marginal == "standard_normal":
            return rng.standard_normal(size=shape)
        atoms, probs = self.params
        return np.asarray(atoms)[rng.choice(len(atoms), size=shape, p=probs)]

    def mean(self) -> float:
        if self.marginal in ("rademacher", "standard_normal"):
            return 0.0
        if self.marginal == "uniform":
            return 0.5 * sum(self.params)
        atoms, probs = self.params
        return float(np.dot(atoms, probs))

    def variance(self) -> float:
        if self.marginal in ("rademacher", "standard_normal"):
            return 1.0
        if self.marginal == "uniform":
            a, b = self.params
            return (b - a) ** 2 / 12.0
        atoms, probs = map(np.asarray, self.params)
        m = np.dot(atoms, probs)
        return float(np.dot((atoms - m) ** 2, probs))

    def abs_moment(self, r: float) -> float:
        """``E|X_0|^r``."""
        if self.marginal == "rademacher":
            return 1.0
        if self.marginal == "standard_normal":
            return 2 ** (r / 2) * math.gamma((r + 1) / 2) / math.sqrt(math.pi)
        if self.marginal == "uniform":
            a, b = self.params
            # sgn(t)|t|^(r+1)/(r+1) is a primitive of |t|^r
            f = lambda t: math.copysign(abs(t) ** (r + 1), t) / (r + 1)
            return (f(b) - f(a)) / (b - a)
        atoms, probs = map(np.asarray, self.params)
        return float(np.dot(np.abs(atoms) ** r, probs))

    def cdf(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.marginal == "rademacher":
            return np.where(t < -1, 0.0, np.where(t < 1, 0.5, 1.0))
        if self.marginal == "uniform":
            a, b = self.params
            return np.clip((t - a) / (b - a), 0.0, 1.0)
        if self.marginal == "standard_normal":
            from scipy.special import ndtr

            return ndtr(t)
        atoms, probs = map(np.asarray, self.params)
        order = np.argsort(atoms)
        cum = np.cumsum(probs[order])
        idx = np.searchsorted(atoms[order], t, side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)


@dataclass(frozen=True, eq=False)
class FiniteMarkov:
    """Stationary Markov chain on the real states ``states``.

    The stationary law is computed from ``transition`` unless supplied (it
    must be supplied when the chain is reducible).  With ``center=True`` the
    states are shifted so that the stationary mean is zero.
    """

    states: np.ndarray
    transition: np.ndarray
    stationary: np.ndarray | None = None
    center: bool = False
    name: str = "markov"

    def __post_init__(self):
        s = np.array(self.states, dtype=float).ravel()
        P = np.array(self.transition, dtype=float)
        d = s.size
        if P.shape != (d, d):
            raise ValueError(f"transition must be {d}x{d}")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
            raise ValueError("transition rows must be probability vectors (+-1e-12)")
        if self.stationary is None:
            pi = _stationary(P)
        else:
            pi = np.array(self.stationary, dtype=float).ravel()
            if pi.size != d or np.any(pi < 0) or abs(pi.sum() - 1) > 1e-12:
                raise ValueError("stationary must be a probability vector")
        if np.max(np.abs(pi @ P - pi)) > 1e-10:
            raise ValueError("stationary law is not invariant under the transition")
        if self.center:
            s = s - float(pi @ s)
        for arr in (s, P, pi):
            arr.setflags(write=False)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "stationary", pi)

    @property
    def size(self) -> int:
        return self.states.size

    @property
    def mean(self) -> float:
        return float(self.stationary @ self.states)

    @property
    def tag(self) -> str:
        return self.name

    def is_centered(self, tol: float = 1e-12) -> bool:
        return abs(self.mean) <= tol * max(1.0, float(np.max(np.abs(self.states))))

    def abs_moment(self, r: float) -> float:
        return float(self.stationary @ np.abs(self.states) ** r)

    def second_eigenvalue(self) -> float:
        ev = np.sort(np.abs(np.linalg.eigvals(self.transition)))[::-1]
        return float(ev[1]) if ev.size > 1 else 0.0

    def cdf(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        ind = self.states[:, None] <= t.ravel()[None, :]
        return (self.stationary @ ind).reshape(t.shape)


def _stationary(P: np.ndarray) -> np.ndarray:
    d = P.shape[0]
    # solve pi (P - I) = 0 with sum(pi) = 1 by least squares
    A = np.vstack([(P - np.eye(d)).T, np.ones(d)])
    b = np.zeros(d + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if np.max(np.abs(pi @ P - pi)) > 1e-10:
        raise ValueError("could not determine a unique stationary law; pass stationary=")
    w = np.linalg.eigvals(P)
    if np.sum(np.abs(w - 1) < 1e-9) > 1:
        raise ValueError("chain is reducible; pass stationary= explicitly")
    return pi


def two_state_chain(a: float = 0.75) -> FiniteMarkov:
    """States ``(-1, 1)``, staying put with probability ``a``."""
    P = np.array([[a, 1 - a], [1 - a, a]])
    return FiniteMarkov([-1.0, 1.0], P, name=f"two-state:a={a!r}")


def reference_three_state_chain() -> FiniteMarkov:
    """A centered, non-reversible 3-state chain with distinct ``|s_j|``."""
    P = np.array([[0.5, 0.3, 0.2], [0.2, 0.6, 0.2], [0.3, 0.3, 0.4]])
    return FiniteMarkov([-1.0, 0.0, 2.0], P, center=True, name="three-state")


def markov_power(model: FiniteMarkov, k: int) -> np.ndarray:
    """``P^k`` (identity for ``k == 0``)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return np.linalg.matrix_power(model.transition, int(k))


@dataclass(frozen=True)
class LSVModel:
    """Orbits of ``T_gamma`` started from an approximately stationary point."""

    gamma: float
    burn_in: int = 1000
    init: str = "ulam"
    m_bins: int = 1024

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.init not in ("ulam", "fixed_point_perturbed", "uniform"):
            raise ValueError(f"unknown init {self.init!r}")

    @property
    def tag(self) -> str:
        return f"lsv:gamma={self.gamma!r},burn_in={self.burn_in},init={self.init},m_bins={self.m_bins}"


Model = Union[IIDModel, FiniteMarkov, LSVModel]


@dataclass(frozen=True, eq=False)
class SamplePath:
    values: np.ndarray = field(repr=False)
    model: str
    seed: int
    note: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("a sample path has at least one value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


# ---------------------------------------------------------------------------
# LSV map


def lsv_map(x: np.ndarray, gamma: float) -> np.ndarray:
    """Vectorized ``T_gamma``; results are clipped to ``[0, 1]``."""
    x = np.asarray(x, dtype=float)
    left = x * (1.0 + (2.0 * x) ** gamma)
    out = np.where(x < 0.5, left, 2.0 * x - 1.0)
    return np.clip(out, 0.0, 1.0)


def lsv_step(x: float, gamma: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"lsv_step: x = {x} outside [0, 1]")
    return float(lsv_map(np.float64(x), gamma))


def _left_preimage(y: np.ndarray, gamma: float) -> np.ndarray:
    """Solve ``x(1 + (2x)^gamma) = y`` on ``[0, 1/2]`` by bisection."""
    lo = np.zeros_like(y)
    hi = np.full_like(y, 0.5)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = mid * (1.0 + (2.0 * mid) ** gamma) < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class UlamDensity:
    gamma: float
    edges: np.ndarray
    probs: np.ndarray  # stationary mass per cell
    iterations: int

    @property
    def density(self) -> np.ndarray:
        return self.probs / np.diff(self.edges)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def cdf(self, t) -> np.ndarray:
        """Piecewise-linear stationary CDF."""
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        return np.interp(t, self.edges, cum)

    def quantile(self, u) -> np.ndarray:
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        return np.interp(u, cum, self.edges)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cells = rng.choice(self.probs.size, size=size, p=self.probs)
        return self.edges[cells] + rng.random(size) * np.diff(self.edges)[cells]


def ulam_matrix(gamma: float, m_bins: int) -> np.ndarray:
    """Ulam transfer matrix ``P[i, j] = Leb(I_i cap T^-1 I_j) / Leb(I_i)``."""
    if m_bins % 2:
        raise ValueError("m_bins must be even so that 1/2 is a cell edge")
    edges = np.linspace(0.0, 1.0, m_bins + 1)
    h = 1.0 / m_bins
    # preimages of every edge under each monotone branch
    pre_left = _left_preimage(edges, gamma) if gamma > 0 else 0.5 * edges
    pre_right = 0.5 * (edges + 1.0)
    P = np.zeros((m_bins, m_bins))
    half = m_bins // 2
    for rows, pre in ((slice(0, half), pre_left), (slice(half, m_bins), pre_right)):
        a = edges[:-1][rows][:, None]
        b = edges[1:][rows][:, None]
        # measure of [a, b] mapped below edge j
        below = np.clip(pre[None, :], a, b) - a
        P[rows] = np.diff(below, axis=1) / h
    return P


def ulam_density(
    gamma: float, m_bins: int = 1024, tol: float = 1e-13, max_iter: int = 100_000
) -> UlamDensity:
    """Stationary density of the Ulam discretization, by power iteration."""
    if m_bins < 16:
        raise ValueError("m_bins must be >= 16")
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    P = ulam_matrix(gamma, m_bins)
    v = np.full(m_bins, 1.0 / m_bins)
    for it in range(1, max_iter + 1):
        w = v @ P
        w /= w.sum()
        if np.max(np.abs(w - v)) < tol * np.max(w):
            v = w
            break
        v = w
    else:
        raise ConvergenceError(f"ulam_density: no convergence after {max_iter} iterations")
    return UlamDensity(gamma, np.linspace(0.0, 1.0, m_bins + 1), v, it)


_ULAM_CACHE: dict[tuple[float, int], UlamDensity] = {}


def _cached_ulam(gamma: float, m_bins: int) -> UlamDensity:
    key = (float(gamma), int(m_bins))
    if key not in _ULAM_CACHE:
        _ULAM_CACHE[key] = ulam_density(gamma, m_bins)
    return _ULAM_CACHE[key]


def lsv_initial_points(model: LSVModel, rng: np.random.Generator, size: int) -> np.ndarray:
    if model.init == "ulam":
        x = _cached_ulam(model.gamma, model.m_bins).sample(rng, size)
    elif model.init == "uniform":
        x = rng.random(size)
    else:
        x = 1e-3 * rng.random(size)
    for _ in range(model.burn_in):
        x = lsv_map(x, model.gamma)
    return x


# ---------------------------------------------------------------------------
# simulation


def simulate_batch(model: Model, n: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """``reps`` independent stationary paths of length ``n``, shape ``(reps, n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(model, IIDModel):
        return model.draw(rng, (reps, n))
    if isinstance(model, FiniteMarkov):
        cum = np.cumsum(model.transition, axis=1)
        cum[:, -1] = 1.0
        idx = np.empty((reps, n), dtype=np.int64)
        idx[:, 0] = rng.choice(model.size, size=reps, p=model.stationary)
        u = rng.random((reps, n - 1))
        for t in range(1, n):
            rows = cum[idx[:, t - 1]]
            idx[:, t] = (u[:, t - 1, None] >= rows).sum(axis=1)
        return model.states[idx]
    if isinstance(model, LSVModel):
        out = np.empty((reps, n))
        x = lsv_initial_points(model, rng, reps)
        for t in range(n):
            out[:, t] = x
            x = lsv_map(x, model.gamma)
        return out
    raise TypeError(f"unsupported model {type(model).__name__}")


def simulate(model: Model, n: int, seed: int) -> SamplePath:
    """One stationary path; identical ``(model, n, seed)`` give identical paths."""
    values = simulate_batch(model, n, 1, replicate_rng(seed))[0]
    note = ""
    if isinstance(model, LSVModel):
        note = "forward orbit of T_gamma"
    return SamplePath(values, model.tag, int(seed), note)


def write_path_csv(path, sample: SamplePath, extra: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(f"# model={sample.model}\n# seed={sample.seed}\n")
        if sample.note:
            fh.write(f"# note={sample.note}\n")
        for k, v in (extra or {}).items():
            fh.write(f"# {k}={v}\n")
        fh.write("value\n")
        for v in sample.values:
            fh.write(format(v, ".17g") + "\n")
