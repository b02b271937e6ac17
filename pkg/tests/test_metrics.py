import math

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st
from scipy.stats import wasserstein_distance

from banach_clt import metrics as M
from banach_clt.frechet import abs_power_function, lambda_class_check, polynomial_function, psi_power
from banach_clt.gaussian import GaussianSampler, covariance_series
from banach_clt.generators import IIDModel, two_state_chain
from banach_clt.laws import DiscreteLaw1D
from banach_clt.measure import lebesgue_grid

E_ABS_Z3 = 2 * math.sqrt(2 / math.pi)


def law_strategy(max_atoms=8):
    return st.integers(1, max_atoms).flatmap(
        lambda k: st.tuples(
            st.lists(st.floats(-10, 10, allow_nan=False), min_size=k, max_size=k, unique=True),
            st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k),
        )
    ).map(lambda t: DiscreteLaw1D(np.array(t[0]), np.array(t[1]) / sum(t[1])))


class TestWasserstein:
    def test_shift(self):
        x = np.random.default_rng(0).standard_normal(500)
        assert M.wasserstein_1d(x, x + 0.7) == pytest.approx(0.7)
        assert M.wasserstein_1d(x, x + 0.7, p=2) == pytest.approx(0.7)

    def test_point_masses(self):
        a, b = DiscreteLaw1D.point_mass(1.0), DiscreteLaw1D.point_mass(-2.0)
        assert M.wasserstein_1d(a, b, 3) == pytest.approx(3.0)

    def test_matches_scipy_unequal_sizes(self, rng):
        for _ in range(20):
            x, y = rng.standard_normal(int(rng.integers(1, 60))), rng.exponential(size=int(rng.integers(1, 60)))
            assert M.wasserstein_1d(x, y) == pytest.approx(wasserstein_distance(x, y), rel=1e-10, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            M.wasserstein_1d([1.0], [2.0], p=0.5)
        with pytest.raises(ValueError):
            M.wasserstein_1d([], [2.0])


@settings(max_examples=60, deadline=None)
@given(law_strategy(), law_strategy(), st.sampled_from([1.0, 2.0, 3.0]))
@example(DiscreteLaw1D([0.0, 1e-6, 1.0], [1 / 3] * 3), DiscreteLaw1D([0.0, 1e-6, 1.0], [1 / 3] * 3), 2.0)
def test_quantile_formula_matches_lp(a, b, p):
    # the LP optimizes W_p^p to within its ~1e-10 optimality tolerance; the
    # p-th root would amplify that, so compare the costs themselves
    assert M.wasserstein_1d(a, b, p) ** p == pytest.approx(M.ot_lp_oracle(a, b, p) ** p, rel=1e-7, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(law_strategy(), law_strategy(), law_strategy())
def test_triangle_inequality(a, b, c):
    assert M.wasserstein_1d(a, c) <= M.wasserstein_1d(a, b) + M.wasserstein_1d(b, c) + 1e-9


def test_transport_lp_cases():
    cost = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert M.transport_lp([0.5, 0.5], [0.5, 0.5], cost) == pytest.approx(0.0)
    assert M.transport_lp([1.0, 0.0], [0.3, 0.7], cost) == pytest.approx(0.7)
    assert M.transport_lp([0.9, 0.1], [0.2, 0.8], cost) == pytest.approx(0.7)
    with pytest.raises(ValueError, match="different total mass"):
        M.transport_lp([1.0], [0.5], [[0.0]])
    with pytest.raises(ValueError):
        M.ot_lp_oracle(DiscreteLaw1D(np.arange(65.0), np.full(65, 1 / 65)), DiscreteLaw1D.point_mass(0.0))


def test_rate_target():
    assert M.wasserstein_rate_target(1.0) == pytest.approx(-1 / 6)
    with pytest.raises(ValueError):
        M.wasserstein_rate_target(0.0)


# ---------------------------------------------------------------------------
# Delta_n


def cube():
    f = abs_power_function(3.0, 1 / 6, name="abs3")
    return f, lambda_class_check(f, 1.0, 0.0, trials=300)


def test_uncertified_function_refused():
    f = polynomial_function([0, 0, 0, 1.0])
    with pytest.raises(M.UncertifiedFunctionError):
        M.delta_n(f, IIDModel("rademacher"), 4, 1000, GaussianSampler.scalar(1.0))
    est = M.delta_n(f, IIDModel("rademacher"), 4, 1000, GaussianSampler.scalar(1.0), waive=True)
    assert est.waived


def test_delta_n_exact_small_n():
    # n = 1 Rademacher: E|X|^3/6 = 1/6 exactly; the Gaussian side is MC
    f, cert = cube()
    est = M.delta_n(f, IIDModel("rademacher"), 1, 200_000, GaussianSampler.scalar(1.0), seed=5, certificate=cert)
    assert est.model_mean == pytest.approx(1 / 6, abs=1e-15)
    assert abs(est.signed - (1 / 6 - E_ABS_Z3 / 6)) < 4 * est.stderr


def test_delta_n_quantile_coupling():
    from scipy.stats import binom

    f, cert = cube()
    n = 16
    k = np.arange(n + 1)
    exact_model = float(binom.pmf(k, n, 0.5) @ (np.abs(2 * k - n) / math.sqrt(n)) ** 3) / 6
    want = abs(exact_model - E_ABS_Z3 / 6)
    est = M.delta_n(f, IIDModel("rademacher"), n, 400_000, None, seed=2, certificate=cert, coupling="quantile")
    assert est.coupling == "quantile"
    assert abs(est.value - want) < 4 * est.stderr + 1e-4
    assert est.stderr < 1e-3
    with pytest.raises(ValueError):
        M.delta_n(f, two_state_chain(), n, 1000, None, certificate=cert, coupling="quantile")


def test_delta_n_deterministic_and_job_independent():
    f, cert = cube()
    g = GaussianSampler(covariance_series(two_state_chain()))
    a = M.delta_n(f, two_state_chain(), 64, 30_000, g, seed=9, certificate=cert, jobs=1)
    b = M.delta_n(f, two_state_chain(), 64, 30_000, g, seed=9, certificate=cert, jobs=3)
    assert a.value == b.value and a.stderr == b.stderr
    assert a.gauss_mean == pytest.approx(3 ** 1.5 * E_ABS_Z3 / 6, abs=5 * a.stderr)


def test_delta_n_field():
    from banach_clt.empirical import field_builder, uniform_cdf

    mu = lebesgue_grid(0.0, 1.0, 32)
    model = IIDModel("uniform", (0.0, 1.0))
    f = psi_power(4.0, 3.0, scale=1 / (6 * 18 * 3))
    g = GaussianSampler(covariance_series(model, mu))
    est = M.delta_n(f, model, 32, 2000, g, seed=0, field_builder=field_builder(uniform_cdf(), mu),
                    measure=mu, waive=True)
    assert math.isfinite(est.value) and est.model_mean > 0 and est.gauss_mean > 0


def test_delta_n_rejects_small_reps():
    f, cert = cube()
    with pytest.raises(ValueError):
        M.delta_n(f, IIDModel("rademacher"), 4, 10, GaussianSampler.scalar(1.0), certificate=cert)


# ---------------------------------------------------------------------------
# Zolotarev


def test_default_dictionary_certified():
    for delta in (0.5, 1.0):
        for f in M.default_dictionary(delta):
            assert lambda_class_check(f, delta, 0.0, trials=400).passed, f.label


def test_zolotarev_scaled_normals():
    normal = lambda s: (lambda rng, size: s * rng.standard_normal(size))
    zb = M.zolotarev_lower(M.default_dictionary(1.0), normal(2.0), normal(1.0), 400_000, seed=4)
    assert zb.best == "abs3"
    assert zb.value == pytest.approx(7 * E_ABS_Z3 / 6, abs=4 * zb.stderr)
    assert zb.per_function["signed3"][0] < 4 * zb.per_function["signed3"][1]


def test_zolotarev_requires_second_order_vanishing():
    with pytest.raises(ValueError, match="second order"):
        M.zolotarev_lower([polynomial_function([0, 1.0])], None, None, 10)
    with pytest.raises(ValueError):
        M.zolotarev_lower([], None, None, 10)


def test_second_moment_identity_gives_zero():
    f = polynomial_function([0, 0, 1.0])
    est = M.delta_n(f, IIDModel("rademacher"), 50, 20_000, GaussianSampler.scalar(1.0), seed=3, waive=True)
    assert est.value < 4 * est.stderr


def test_iid_field_l2_square_gives_zero():
    from banach_clt.empirical import field_builder, uniform_cdf

    mu = lebesgue_grid(0.0, 1.0, 64)
    model = IIDModel("uniform", (0.0, 1.0))
    f = psi_power(2.0, 2.0)
    cert = lambda_class_check(f, 1.0, 2.0, trials=50, measure=mu)
    assert cert.passed
    g = GaussianSampler(covariance_series(model, mu))
    for n in (10, 200):
        est = M.delta_n(f, model, n, 20_000, g, seed=n, field_builder=field_builder(uniform_cdf(), mu),
                        measure=mu, certificate=cert)
        assert est.value < 4 * est.stderr
