import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banach_clt.frechet import (
    PsiFunctional,
    SingularEvaluationError,
    abs_power_function,
    fd_derivative,
    holder_constant,
    lambda_class_check,
    polynomial_function,
    psi_d1,
    psi_d2,
    psi_d3,
    psi_eval,
    psi_power,
)
from banach_clt.measure import DiscreteMeasure, LpVector, lp_norm

from conftest import random_measure


def one_atom(v):
    return LpVector(DiscreteMeasure([0.0], [1.0]), [v])


def pair(a, b):
    return LpVector(DiscreteMeasure([0.0, 1.0], [1.0, 1.0]), [a, b])


def away_from_zero(rng, mu):
    return LpVector(mu, rng.choice([-1.0, 1.0], mu.size) * rng.uniform(0.5, 2.0, mu.size))


class TestClosedForms:
    def test_eval(self):
        assert psi_eval(PsiFunctional(2, 2), pair(3, 4)) == pytest.approx(25)
        assert psi_eval(PsiFunctional(3, 3), one_atom(2)) == pytest.approx(8)
        assert psi_eval(PsiFunctional(3, 3), pair(0, 0)) == 0

    def test_d1(self):
        assert psi_d1(PsiFunctional(3, 3), one_atom(2), one_atom(1)) == pytest.approx(12)
        assert psi_d1(PsiFunctional(3, 3), pair(0, 0), pair(1, 2)) == 0.0
        assert psi_d1(PsiFunctional(2, 2), pair(3, 4), pair(1, 0)) == pytest.approx(6)

    def test_d1_singular(self):
        with pytest.raises(SingularEvaluationError):
            psi_d1(PsiFunctional(3, 1), pair(0, 0), pair(1, 0))

    def test_d2(self, rng):
        mu = random_measure(rng, 5)
        x, h1, h2 = (LpVector(mu, rng.standard_normal(5)) for _ in range(3))
        inner = float(np.sum(mu.weights * h1.values * h2.values))
        assert psi_d2(PsiFunctional(2, 2), x, h1, h2) == pytest.approx(2 * inner)
        assert psi_d2(PsiFunctional(3, 3), one_atom(1), one_atom(1), one_atom(1)) == pytest.approx(6)
        assert psi_d2(PsiFunctional(4, 3), pair(0, 0), pair(1, 0), pair(0, 1)) == 0.0
        with pytest.raises(SingularEvaluationError):
            psi_d2(PsiFunctional(4, 2), pair(0, 0), pair(1, 0), pair(0, 1))

    def test_d3(self, rng):
        F = PsiFunctional(3, 3)
        assert psi_d3(F, one_atom(1), one_atom(1), one_atom(1), one_atom(1)) == pytest.approx(6)
        mu = random_measure(rng, 4)
        x, h = away_from_zero(rng, mu), LpVector(mu, rng.standard_normal(4))
        assert psi_d3(PsiFunctional(5, 3), x, h, h, mu.zeros()) == 0.0
        with pytest.raises(SingularEvaluationError):
            psi_d3(F, pair(0, 0), pair(1, 0), pair(1, 0), pair(1, 0))
        with pytest.raises(ValueError):
            psi_d3(PsiFunctional(2.5, 3), x, h, h, h)

    def test_d3_scalar_oracle(self):
        # one atom: psi(x) = |x|^q, whose third derivative is q(q-1)(q-2) sgn(x)|x|^(q-3)
        for p, q in [(3, 3), (4, 3), (5, 2.5), (2, 2)]:
            for v in (-1.7, 0.6):
                got = psi_d3(PsiFunctional(p, q), one_atom(v), one_atom(1), one_atom(1), one_atom(1))
                want = q * (q - 1) * (q - 2) * math.copysign(abs(v) ** (q - 3), v)
                assert got == pytest.approx(want, abs=1e-12)

    def test_constructor_checks(self):
        with pytest.raises(ValueError):
            PsiFunctional(1.5, 2)
        with pytest.raises(ValueError):
            PsiFunctional(3, 0)


@pytest.mark.parametrize("p,q", [(2, 2), (3, 3), (4, 3), (5, 2.5)])
def test_finite_difference_agreement(p, q, rng):
    F = PsiFunctional(p, q)
    d = (psi_d1, psi_d2, psi_d3)
    for _ in range(10):
        m = int(rng.integers(4, 9))
        mu = random_measure(rng, m)
        x = away_from_zero(rng, mu)
        hs = [LpVector(mu, rng.standard_normal(m)) for _ in range(3)]
        for order, tol in ((1, 1e-5), (2, 1e-5), (3, 1e-4)):
            exact = d[order - 1](F, x, *hs[:order])
            fd = fd_derivative(F, x, hs[:order], order).value
            scale = q * lp_norm(x, p) ** (q - order) * math.prod(lp_norm(h, p) for h in hs[:order])
            assert abs(exact - fd) <= tol * max(abs(exact), 1e-2 * scale)


def test_fd_examples():
    F = PsiFunctional(2, 2)
    assert fd_derivative(F, pair(3, 4), [pair(1, 0)], 1, step=1e-4).value == pytest.approx(6, abs=1e-7)
    cube = lambda v: float(v.values[0]) ** 3
    assert fd_derivative(cube, one_atom(2.0), [one_atom(1.0)], 2).value == pytest.approx(12, rel=1e-6)
    assert fd_derivative(cube, one_atom(2.0), [one_atom(1.0)], 3).value == pytest.approx(6, rel=1e-6)
    with pytest.raises(ValueError):
        fd_derivative(F, pair(3, 4), [pair(1, 0)], 4)


@pytest.mark.parametrize("p,q", [(3, 3), (4, 3), (5, 2.5), (4, 7)])
def test_symmetry_and_multilinearity(p, q, rng):
    F = PsiFunctional(p, q)
    mu = random_measure(rng, 6)
    x = away_from_zero(rng, mu)
    h = [LpVector(mu, rng.standard_normal(6)) for _ in range(4)]
    d2 = psi_d2(F, x, h[0], h[1])
    assert psi_d2(F, x, h[1], h[0]) == pytest.approx(d2, rel=1e-13)
    base = psi_d3(F, x, h[0], h[1], h[2])
    for perm in itertools.permutations(h[:3]):
        assert psi_d3(F, x, *perm) == pytest.approx(base, rel=1e-12, abs=1e-14)
    a, b = 1.7, -0.4
    lin = psi_d3(F, x, a * h[0] + b * h[3], h[1], h[2])
    assert lin == pytest.approx(a * base + b * psi_d3(F, x, h[3], h[1], h[2]), rel=1e-11, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-2), st.sampled_from([(3, 3), (4, 3), (5, 2.5)]))
def test_scaling_law(c, pq):
    p, q = pq
    F = PsiFunctional(p, q)
    mu = DiscreteMeasure([0.0, 1.0, 2.0], [0.5, 1.0, 0.25])
    x = LpVector(mu, [1.0, -0.5, 2.0])
    h = LpVector(mu, [0.3, 1.0, -1.0])
    assert psi_eval(F, c * x) == pytest.approx(abs(c) ** q * psi_eval(F, x), rel=1e-12)
    s = math.copysign(1.0, c)
    assert psi_d1(F, c * x, h) == pytest.approx(s * abs(c) ** (q - 1) * psi_d1(F, x, h), rel=1e-11)
    assert psi_d2(F, c * x, h, h) == pytest.approx(abs(c) ** (q - 2) * psi_d2(F, x, h, h), rel=1e-11)
    assert psi_d3(F, c * x, h, h, h) == pytest.approx(s * abs(c) ** (q - 3) * psi_d3(F, x, h, h, h), rel=1e-10)


def test_holder_constant():
    assert holder_constant(3) == 6
    assert holder_constant(4) == 42
    assert holder_constant(5) == 102
    with pytest.raises(ValueError):
        holder_constant(2.5)


class TestClassCheck:
    def test_constant_second_derivative(self):
        mu = DiscreteMeasure(np.arange(4.0), np.ones(4))
        r = lambda_class_check(psi_power(2, 2), 1.0, 2.0, trials=50, measure=mu)
        assert r.max_ratio == pytest.approx(0.0, abs=1e-12)
        assert r.passed
        assert not lambda_class_check(psi_power(2, 2), 1.0, 1.0, trials=10, measure=mu).passed

    def test_scaled_psi3(self):
        mu = DiscreteMeasure(np.arange(5.0), np.full(5, 0.4))
        r = lambda_class_check(psi_power(3, 3, 1 / holder_constant(3)), 1.0, 0.0, trials=200, measure=mu)
        assert r.passed
        assert r.note == "probe lower bound"

    def test_scalar_abs_cube(self):
        assert lambda_class_check(abs_power_function(3, 1 / 6), 1.0, 0.0).passed
        assert not lambda_class_check(abs_power_function(3, 1.0), 1.0, 0.0).passed

    def test_quadratic_needs_M(self):
        f = polynomial_function([0, 0, 1])
        assert not lambda_class_check(f, 1.0, 1.0).passed
        assert lambda_class_check(f, 1.0, 2.0).passed
