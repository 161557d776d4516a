import math

import numpy as np
import pytest

from fracstep.specfun import _series_double, gamma, mittag_leffler


def test_gamma_integer_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-15)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-15)


def test_gamma_half():
    assert gamma(0.5) == pytest.approx(1.7724538509055160, rel=1e-13)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, -2.0, -7.0])
def test_gamma_pole_errors(x):
    with pytest.raises(ValueError):
        gamma(x)


def test_gamma_overflow():
    with pytest.raises(OverflowError):
        gamma(172.0)


def test_gamma_recurrence_random():
    rng = np.random.default_rng(20240803)
    for x in rng.uniform(0.1, 20.0, size=1000):
        assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)


def test_gamma_reflection_negative_arguments():
    rng = np.random.default_rng(7)
    xs = rng.uniform(-5.0, 0.0, size=300)
    xs = xs[np.abs(xs - np.round(xs)) > 1e-3]
    for x in xs:
        val = gamma(x) * gamma(1.0 - x) * math.sin(math.pi * x) / math.pi
        assert val == pytest.approx(1.0, rel=1e-10)


def test_ml_at_zero_is_one():
    assert mittag_leffler(0.7, 0.0) == 1.0


def test_ml_alpha_one_is_exp():
    assert mittag_leffler(1.0, 1.0) == pytest.approx(2.718281828459045, rel=1e-13)


def test_ml_half_vs_erfc_oracle():
    # E_{1/2}(z) = exp(z^2) erfc(-z); stdlib erfc is the independent oracle
    expected = math.exp(1.0) * math.erfc(1.0)
    assert mittag_leffler(0.5, -1.0) == pytest.approx(expected, rel=1e-12)
    assert mittag_leffler(0.5, -1.0) == pytest.approx(0.42758357615, rel=1e-10)


def test_ml_matches_exp_on_interval():
    for z in np.linspace(-5.0, 5.0, 41):
        assert mittag_leffler(1.0, float(z)) == pytest.approx(math.exp(z), rel=1e-12)


def test_ml_strong_cancellation_branch():
    # alpha = 1/2, z = -5 needs the high-precision re-sum to meet tolerance
    expected = math.exp(25.0) * math.erfc(5.0)
    assert mittag_leffler(0.5, -5.0) == pytest.approx(expected, rel=1e-12)


def test_ml_domain_errors():
    with pytest.raises(ValueError):
        mittag_leffler(0.5, 5.1)
    with pytest.raises(ValueError):
        mittag_leffler(0.0, 0.5)
    with pytest.raises(ValueError):
        mittag_leffler(1.2, 0.5)


@pytest.mark.parametrize("alpha,z", [(0.3, -1.0), (0.7, -0.5), (1.0, 2.5), (0.1, -1.0)])
def test_ml_stopping_rule(alpha, z):
    # terminating term must sit below 1e-16 of the running sum
    _, _, terms, last_ratio = _series_double(alpha, z)
    assert terms >= 2
    assert last_ratio < 1e-16
