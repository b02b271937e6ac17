import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banach_clt import empirical as E
from banach_clt.generators import IIDModel, LSVModel, replicate_rng, simulate, simulate_batch, two_state_chain
from banach_clt.measure import DiscreteMeasure, LpVector, lebesgue_grid, lp_norm


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 30))
def test_counts_below_brute_force(seed, n, m):
    rng = np.random.default_rng(seed)
    grid = np.sort(rng.choice(np.linspace(-1, 1, 41), m, replace=False))
    paths = rng.choice(np.linspace(-1.2, 1.2, 13), size=(3, n))
    want = (paths[:, :, None] <= grid[None, None, :]).sum(axis=1)
    np.testing.assert_array_equal(E._counts_below(paths, grid), want)


def test_field_definition():
    mu = lebesgue_grid(0.0, 1.0, 4)
    f = E.empirical_field([0.1, 0.6, 0.6, 0.9], E.uniform_cdf(), mu)
    t = mu.points
    counts = np.array([(np.array([0.1, 0.6, 0.6, 0.9]) <= s).sum() for s in t])
    np.testing.assert_allclose(f.field.values, (counts - 4 * t) / 2)
    assert f.n == 4 and f.cdf_source == "uniform(0.0,1.0)"


def test_cdf_validation():
    mu = lebesgue_grid(0.0, 1.0, 5)
    with pytest.raises(ValueError, match="nondecreasing"):
        E.CDFSpec(lambda t: 1 - t, "bad").on_grid(mu)
    with pytest.raises(ValueError, match="leave"):
        E.CDFSpec(lambda t: 2 * t, "bad").on_grid(mu)
    with pytest.raises(ValueError):
        E.tabulated_cdf([0, 1], [0.5, 0.2])
    tab = E.tabulated_cdf([0.0, 1.0], [0.0, 1.0])
    np.testing.assert_allclose(tab.on_grid(mu), mu.points)


def test_model_cdf_sources():
    assert E.model_cdf(two_state_chain()).source.startswith("exact")
    lsv = E.model_cdf(LSVModel(0.3), m_bins=256)
    assert lsv.source.startswith("ulam")
    F = lsv.on_grid(lebesgue_grid(0.0, 1.0, 50))
    assert F[0] >= 0 and F[-1] == pytest.approx(1.0, abs=0.02)
    with pytest.raises(TypeError):
        E.model_cdf(object())


def test_calibration_cdf_is_deterministic():
    a = E.calibration_cdf(IIDModel("uniform", (0.0, 1.0)), 10_000, seed=1)
    b = E.calibration_cdf(IIDModel("uniform", (0.0, 1.0)), 10_000, seed=1)
    t = np.linspace(0, 1, 11)
    np.testing.assert_array_equal(a.fn(t), b.fn(t))
    np.testing.assert_allclose(a.fn(t), t, atol=0.02)


def test_iid_second_moment():
    # E |G_n|_2^2 = int F(1 - F) dmu for i.i.d. data, for every n
    mu = lebesgue_grid(0.0, 1.0, 64)
    F = E.uniform_cdf()
    assert E.iid_l2_moment(F, mu) == pytest.approx(1 / 6, rel=1e-3)
    paths = simulate_batch(IIDModel("uniform", (0.0, 1.0)), 50, 20_000, replicate_rng(0))
    norms = E.field_norms(paths, F, mu, 2.0)
    est = np.mean(norms**2)
    se = np.std(norms**2) / math.sqrt(norms.size)
    assert abs(est - E.iid_l2_moment(F, mu)) < 4 * se


def test_sobolev_sup_is_dual_norm(rng):
    mu = DiscreteMeasure(np.linspace(0, 1, 30), rng.random(30) + 0.1)
    for p in (2.0, 3.0, 5.0):
        v = LpVector(mu, rng.standard_normal(30))
        assert E.sobolev_sup(v, p) == pytest.approx(lp_norm(v, p), rel=1e-12)
        # no unit vector of L^q does better
        q = p / (p - 1)
        for _ in range(50):
            g = rng.standard_normal(30)
            g /= (mu.weights @ np.abs(g) ** q) ** (1 / q)
            assert abs(mu.weights @ (g * v.values)) <= E.sobolev_sup(v, p) + 1e-12
    assert E.sobolev_sup(LpVector(mu, np.zeros(30)), 2.0) == 0.0
    with pytest.raises(ValueError):
        E.sobolev_sup(v, 1.5)


def test_default_grid():
    mu = E.default_grid(np.array([0.0, 1.0]), m=11, pad=0.1)
    assert mu.points[0] == pytest.approx(-0.1) and mu.points[-1] == pytest.approx(1.1)
    assert mu.total_mass == pytest.approx(1.2 * 11 / 10)


def test_empirical_field_from_path():
    path = simulate(two_state_chain(), 1000, seed=4)
    mu = lebesgue_grid(-1.5, 1.5, 7)
    f = E.empirical_field(path, E.model_cdf(two_state_chain()), mu)
    # below -1 the field is 0; above 1 it is 0 as well
    assert f.field.values[0] == 0.0 and f.field.values[-1] == 0.0
    with pytest.raises(ValueError):
        E.empirical_field(np.array([]), E.uniform_cdf(), mu)
