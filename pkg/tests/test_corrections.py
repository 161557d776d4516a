import math
import warnings

import numpy as np
import pytest

from fracstep.corrections import (
    CorrectionSet,
    corrected_wsgl_apply,
    d1_u_weight_table,
    d1_v_weight_table,
    s_factor,
    starting_weight_table,
    starting_weights_d1_u,
    starting_weights_d1_v,
    starting_weights_fractional,
    vandermonde_diagnostics,
)
from fracstep.glweights import SampledPath, apply_wsgl_pair, rl_deriv_power, wsgl_weights
from fracstep.specfun import gamma


def test_correction_set_validation():
    with pytest.raises(ValueError):
        CorrectionSet((0.5, 0.5))
    with pytest.raises(ValueError):
        CorrectionSet((0.5, 0.2))
    with pytest.raises(ValueError):
        CorrectionSet((-0.1, 0.5))
    with pytest.raises(ValueError):
        CorrectionSet(tuple(0.1 * k for k in range(1, 12)))  # m > 10
    assert CorrectionSet((0.5, 1.0)).m == 2


def test_single_unknown_starting_weight():
    # m = 1, sigma = alpha = 0.5, n = 1: w = Gamma(1.5) - g_0
    g = wsgl_weights(0.5, 4)
    w = starting_weights_fractional(0.5, CorrectionSet((0.5,)), g, 1)
    assert w[0] == pytest.approx(gamma(1.5) - 1.25, rel=1e-14)
    assert w[0] == pytest.approx(-0.3637731, abs=1e-7)


def test_batch_table_matches_per_step_rows():
    alpha = 0.4
    cset = CorrectionSet((0.4, 0.8, 1.2))
    g = wsgl_weights(alpha, 64)
    W = starting_weight_table(alpha, cset, g, 64)
    # summation order differs between the batch convolution and the per-step
    # dot; agreement is limited by the system's conditioning
    for n in (1, 2, 17, 64):
        np.testing.assert_allclose(
            W[n], starting_weights_fractional(alpha, cset, g, n), rtol=1e-9, atol=1e-12
        )


def test_bdf2_starting_weight_decay():
    # alpha = 1 reduces to BDF2, so the single starting weight must fall off
    # like n^(sigma-3)
    sigma = 0.8
    g = wsgl_weights(1.0, 300)
    W = starting_weight_table(1.0, CorrectionSet((sigma,)), g, 300)
    ns = np.arange(8, 257)
    ratios = np.abs(W[8:257, 0]) / ns ** (sigma - 3.0)
    assert np.all(np.abs(W[9:257, 0]) < np.abs(W[8:256, 0]))
    assert ratios.max() <= 2.0 * ratios[:8].max()


@pytest.mark.parametrize("alpha,m", [(0.3, 3), (0.3, 7), (0.3, 8), (0.5, 5), (0.7, 4)])
def test_corrected_operator_exactness(alpha, m):
    # the corrected operator reproduces the closed-form derivative of each
    # corrected power, up to the linear-system residual (relative to the
    # derivative scale, which grows like n^(sigma - alpha))
    cset = CorrectionSet(tuple(k * alpha for k in range(1, m + 1)))
    g = wsgl_weights(alpha, 100)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        W = starting_weight_table(alpha, cset, g, 100)
    ks = np.arange(101, dtype=float)
    for s in cset.sigmas:
        U = ks**s
        vals = np.convolve(g.g, U)[:101] + W @ U[1 : m + 1]
        exact = np.array([rl_deriv_power(alpha, s, n) for n in ks[1:]])
        rel = np.abs(vals[1:] - exact) / np.maximum(1.0, np.abs(exact))
        assert rel.max() <= 1e-9


def test_starting_weight_decay_rate():
    # rows decay like the sum of n^(sigma_k - 2 - alpha) tails
    alpha = 0.5
    cset = CorrectionSet((0.5, 1.0, 1.5))
    g = wsgl_weights(alpha, 300)
    W = starting_weight_table(alpha, cset, g, 300)
    ns = np.arange(16, 257, dtype=float)
    bound = sum(ns ** (s - 2.0 - alpha) for s in cset.sigmas)
    for r in range(cset.m):
        ratios = np.abs(W[16:257, r]) / bound
        assert ratios.max() <= 2.0 * max(ratios[0], ratios.mean())


def test_d1_u_exact_for_matching_powers():
    cset2 = CorrectionSet((2.0,))
    cset1 = CorrectionSet((1.0,))
    for n in (1, 4, 9):
        assert starting_weights_d1_u(cset2, 1, n)[0] == pytest.approx(0.0, abs=1e-13)
        assert starting_weights_d1_u(cset1, 1, n)[0] == pytest.approx(0.0, abs=1e-13)


def test_d1_u_fractional_power_value():
    # direct arithmetic oracle for sigma = 2.5, n = 4
    expected = 1.25 * (5.0**1.5 + 4.0**1.5) - (5.0**2.5 - 4.0**2.5)
    w = starting_weights_d1_u(CorrectionSet((2.5,)), 1, 4)
    assert w[0] == pytest.approx(expected, rel=1e-13)


def test_d1_v_exact_for_matching_powers():
    for sigma in (3.0, 2.0):  # effective exponents 2 and 1
        w = starting_weights_d1_v(CorrectionSet((sigma,)), 1, 5)
        assert w[0] == pytest.approx(0.0, abs=1e-13)


def test_d1_v_fractional_power_value():
    # sigma = 3.5 acts at exponent 2.5; same arithmetic as the u-variant
    s = 2.5
    n = 4
    expected = s / 2.0 * ((n + 1.0) ** (s - 1.0) + n ** (s - 1.0)) - ((n + 1.0) ** s - n**s)
    w = starting_weights_d1_v(CorrectionSet((3.5,)), 1, n)
    assert w[0] == pytest.approx(expected, rel=1e-13)


def test_d1_tables_match_rows():
    cset = CorrectionSet((2.0, 2.5, 3.5))
    Wu = d1_u_weight_table(cset, 3, 20)
    Wv = d1_v_weight_table(cset, 2, 20)
    for n in (0, 3, 20):
        np.testing.assert_allclose(Wu[n], starting_weights_d1_u(cset, 3, n), atol=1e-14)
        np.testing.assert_allclose(Wv[n], starting_weights_d1_v(cset, 2, n), atol=1e-14)


def test_corrected_apply_empty_set_is_plain_operator():
    path = SampledPath.from_function(lambda t: t**1.7, 0.05, 1.0)
    empty = CorrectionSet(())
    for n in (1, 5, 20):
        assert corrected_wsgl_apply(path, 0.5, empty, n) == apply_wsgl_pair(path, 0.5, 0, -1, n)


def test_corrected_apply_reproduces_power_derivative():
    alpha = 0.5
    cset = CorrectionSet((0.5, 1.0))
    tau = 0.02
    path = SampledPath.from_function(lambda t: t**0.5, tau, 1.0)
    for n in (2, 10, 50):
        val = corrected_wsgl_apply(path, alpha, cset, n)
        exact = rl_deriv_power(alpha, 0.5, n * tau)
        assert val == pytest.approx(exact, rel=1e-10, abs=1e-10 * tau**-alpha)


def _operator_error_profile(alpha, m, tau, n_t, exponent):
    t = np.arange(n_t + 1) * tau
    U = t**exponent
    g = wsgl_weights(alpha, n_t)
    vals = tau ** (-alpha) * np.convolve(g.g, U)[: n_t + 1]
    if m:
        cset = CorrectionSet(tuple(k * alpha for k in range(1, m + 1)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            W = starting_weight_table(alpha, cset, g, n_t)
        vals = vals + tau ** (-alpha) * (W @ U[1 : m + 1])
    exact = np.zeros(n_t + 1)
    exact[1:] = rl_deriv_power(alpha, exponent, 1.0) * t[1:] ** (exponent - alpha)
    return t, np.abs(vals - exact)


def test_low_order_power_correction_progression():
    # alpha = 0.05, U = t^(8 alpha): pointwise error away from the origin
    # drops sharply with the number of corrections
    alpha = 0.05
    tau = 1e-3
    errs = {}
    for m in (1, 6):
        t, err = _operator_error_profile(alpha, m, tau, 1000, 8 * alpha)
        errs[m] = err[t >= 0.2].max()
    assert errs[6] <= 1e-7
    assert errs[1] / errs[6] >= 10.0


def test_error_factor_scaling_matches_s_factor():
    # max pointwise error decreases with m whenever the error factor does
    alpha = 0.05
    tau = 1e-2
    sigma = 8 * alpha
    factors = []
    errors = []
    for m in (1, 3, 5, 6):
        cset = CorrectionSet(tuple(k * alpha for k in range(1, m + 1)))
        factors.append(s_factor(sigma, cset))
        t, err = _operator_error_profile(alpha, m, tau, 100, sigma)
        errors.append(err[t >= 0.2].max())
    assert all(b < a for a, b in zip(factors, factors[1:]))
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_vandermonde_diagnostics_values():
    diag = vandermonde_diagnostics(0.1, CorrectionSet((0.1, 0.2, 0.3)))
    assert 3.20e3 / 3.0 <= diag.condition_number <= 3.20e3 * 3.0
    diag3 = vandermonde_diagnostics(0.3, CorrectionSet((0.3, 0.6, 0.9)))
    assert diag3.max_residual <= 1e-13


def test_vandermonde_diagnostics_m1_identity():
    diag = vandermonde_diagnostics(0.5, CorrectionSet((0.5,)))
    assert diag.condition_number == pytest.approx(1.0, rel=1e-14)


def test_condition_number_monotone_in_m():
    conds = []
    for m in range(2, 8):
        cset = CorrectionSet(tuple(0.1 * k for k in range(1, m + 1)))
        conds.append(vandermonde_diagnostics(0.1, cset).condition_number)
    assert all(b >= a for a, b in zip(conds, conds[1:]))


def test_ill_conditioning_warning():
    cset = CorrectionSet(tuple(0.05 * k for k in range(1, 9)))  # cond ~ 2e14
    g = wsgl_weights(0.05, 8)
    with pytest.warns(UserWarning):
        starting_weights_fractional(0.05, cset, g, 4)


def test_s_factor_values():
    cset = CorrectionSet((0.1, 0.2, 0.3))
    assert s_factor(0.8, cset) == pytest.approx(0.21, rel=1e-12)
    assert s_factor(0.2, cset) == 0.0
    assert s_factor(1.3, CorrectionSet(())) == 1.0
