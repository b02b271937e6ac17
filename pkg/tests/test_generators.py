import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banach_clt.generators import (
    FiniteMarkov,
    IIDModel,
    LSVModel,
    lsv_map,
    lsv_step,
    markov_power,
    reference_three_state_chain,
    simulate,
    simulate_batch,
    replicate_rng,
    two_state_chain,
    ulam_density,
    write_path_csv,
)


def test_lsv_step_examples():
    assert lsv_step(0.5, 0.3) == 0.0
    assert lsv_step(0.75, 0.9) == 0.5
    assert lsv_step(0.25, 0.5) == pytest.approx(0.25 * (1 + math.sqrt(2) * 0.5))
    with pytest.raises(ValueError):
        lsv_step(1.2, 0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0.01, 0.99))
def test_lsv_orbit_stays_in_unit_interval(x, g):
    y = np.array([x])
    for _ in range(20):
        y = lsv_map(y, g)
        assert 0.0 <= y[0] <= 1.0


def test_iid_determinism_and_mean():
    m = IIDModel("rademacher")
    a, b = simulate(m, 4, 11), simulate(m, 4, 11)
    np.testing.assert_array_equal(a.values, b.values)
    assert set(np.unique(a.values)) <= {-1.0, 1.0}
    assert abs(simulate(m, 200_000, 3).values.mean()) < 5 / math.sqrt(200_000)


def test_iid_moments():
    u = IIDModel("uniform", (-1.0, 2.0))
    assert u.abs_moment(2) == pytest.approx((1 + 8) / 3 / 3)
    assert u.mean() == pytest.approx(0.5)
    n = IIDModel("standard_normal")
    assert n.abs_moment(3) == pytest.approx(2 * math.sqrt(2 / math.pi))
    d = IIDModel("discrete", ([0.0, 2.0], [0.25, 0.75]))
    assert d.abs_moment(3) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        IIDModel("discrete", ([0.0], [0.9]))


def test_two_state_autocorrelation():
    path = simulate(two_state_chain(0.75), 100_000, 5).values
    r1 = np.mean(path[:-1] * path[1:])
    # lag-1 products are +-1; the effective sample size is reduced by the correlation
    assert abs(r1 - 0.5) < 3 * math.sqrt(3 * 0.75 / 100_000)


def test_markov_power():
    m = two_state_chain(0.75)
    np.testing.assert_array_equal(markov_power(m, 0), np.eye(2))
    assert markov_power(m, 2)[0, 0] == pytest.approx(0.625)
    for k in range(1, 8):
        assert markov_power(m, k)[0, 0] == pytest.approx((1 + 0.5**k) / 2, abs=1e-15)
    np.testing.assert_allclose(markov_power(m, 200), np.full((2, 2), 0.5), atol=1e-12)
    m3 = reference_three_state_chain()
    np.testing.assert_allclose(markov_power(m3, 7), markov_power(m3, 3) @ markov_power(m3, 4), atol=1e-10)
    np.testing.assert_allclose(markov_power(m3, 9).sum(axis=1), 1.0, atol=1e-10)


def test_markov_validation():
    with pytest.raises(ValueError):
        FiniteMarkov([0.0, 1.0], np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        FiniteMarkov([0.0, 1.0], np.eye(2))
    copy = FiniteMarkov([-1.0, 1.0], np.eye(2), stationary=[0.5, 0.5])
    assert copy.is_centered()
    m3 = reference_three_state_chain()
    assert m3.is_centered(1e-12)
    np.testing.assert_allclose(m3.stationary @ m3.transition, m3.stationary, atol=1e-12)


def test_markov_stationarity_smoke():
    m3 = reference_three_state_chain()
    paths = simulate_batch(m3, 50, 40_000, replicate_rng(1))
    for col in (0, 25):
        freq = np.array([(paths[:, col] == s).mean() for s in m3.states])
        assert np.all(np.abs(freq - m3.stationary) < 4 * np.sqrt(m3.stationary / 40_000))


def test_ulam_density():
    u = ulam_density(0.25, 1024)
    assert np.sum(u.density * np.diff(u.edges)) == pytest.approx(1.0, abs=1e-10)
    mid = u.midpoints
    ratio = (mid**0.25 * u.density)[mid > 0.01]
    assert ratio.min() > 0.3 and ratio.max() < 1.5
    flat = ulam_density(0.0, 64)
    np.testing.assert_allclose(flat.density, 1.0, atol=1e-8)
    with pytest.raises(ValueError):
        ulam_density(0.25, 8)


def test_lsv_simulation():
    path = simulate(LSVModel(0.25, burn_in=200), 10_000, 2).values
    assert path.min() >= 0 and path.max() <= 1
    # the invariant density blows up at 0
    assert np.mean(path < 0.05) > 0.05
    assert "forward" in simulate(LSVModel(0.25, burn_in=10), 5, 2).note


def test_lsv_model_checks():
    with pytest.raises(ValueError):
        LSVModel(1.2)


def test_write_path_csv(tmp_path):
    p = simulate(IIDModel("rademacher"), 3, 1)
    write_path_csv(tmp_path / "p.csv", p, {"burn_in": 0})
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "# model=iid:rademacher"
    assert lines[-4] == "value"
