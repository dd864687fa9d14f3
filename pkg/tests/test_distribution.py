"""Distribution primitives against frozen high-precision references.

Reference constants were computed once with 50-digit arithmetic (mpmath)
and are pasted here as literals, so the tests are independent of the
code under test.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gevmiss import (
    GevParams,
    analytic_pwm,
    gev_cdf,
    gev_logpdf,
    gev_quantile,
    return_level,
)
from gevmiss.distribution import XI_GUMBEL_EPS

EXP_NEG_ONE = 0.36787944117144233
CDF_SHAPE_TENTH_AT_ONE = 0.6800810549704990  # exp(-1.1^-10)
LOGPDF_02_02_AT_ONE = -1.8859295824450496
GUMBEL_LEVEL_T100 = 4.6001492267765800
GAMMA_08 = 1.1642297137253034
PWM_02 = (0.8211485686265169, 0.8433718924873124, 0.7505282920122115)
QUANTILE_12M02_95 = 5.479071552338399

params_strategy = st.builds(
    GevParams,
    mu=st.floats(-5.0, 5.0),
    sigma=st.floats(0.1, 10.0),
    xi=st.floats(-0.9, 0.9),
)


def test_cdf_at_location():
    assert gev_cdf(GevParams(0, 1, 0.5), 0.0) == pytest.approx(EXP_NEG_ONE, abs=1e-15)
    assert gev_cdf(GevParams(0, 1, 0.0), 0.0) == pytest.approx(EXP_NEG_ONE, abs=1e-15)


def test_cdf_outside_support_clamps():
    # upper endpoint mu - sigma/xi = 2 for xi = -0.5
    assert gev_cdf(GevParams(0, 1, -0.5), 2.5) == 1.0
    # lower endpoint -2 for xi = 0.5
    assert gev_cdf(GevParams(0, 1, 0.5), -3.0) == 0.0


def test_cdf_reference_value():
    value = gev_cdf(GevParams(0, 1, 0.1), 1.0)
    assert value == pytest.approx(CDF_SHAPE_TENTH_AT_ONE, abs=1e-15)
    assert value == pytest.approx(math.exp(-(1.1 ** -10)), abs=1e-15)


def test_cdf_vectorized_shape():
    z = np.array([-1.0, 0.0, 1.0, 2.0])
    out = gev_cdf(GevParams(0, 1, 0.2), z)
    assert out.shape == z.shape
    assert isinstance(gev_cdf(GevParams(0, 1, 0.2), 0.5), float)


def test_logpdf_simple_points():
    assert gev_logpdf(GevParams(0, 1, 0.0), 0.0) == pytest.approx(-1.0, abs=1e-15)
    assert gev_logpdf(GevParams(0, 1, 0.5), 0.0) == pytest.approx(-1.0, abs=1e-15)


def test_logpdf_reference_value():
    assert gev_logpdf(GevParams(0, 2, 0.2), 1.0) == pytest.approx(LOGPDF_02_02_AT_ONE, abs=1e-14)


def test_logpdf_outside_support_is_neg_inf():
    assert gev_logpdf(GevParams(0, 1, 0.5), -3.0) == -np.inf
    assert gev_logpdf(GevParams(0, 1, -0.5), 2.5) == -np.inf


@pytest.mark.parametrize("xi", [0.2, -0.3, 0.0])
def test_density_integrates_to_one(xi):
    p = GevParams(0.0, 1.0, xi)
    lo = -1.0 / xi + 1e-12 if xi > 0 else -np.inf
    hi = -1.0 / xi - 1e-12 if xi < 0 else np.inf
    total, err = quad(lambda z: math.exp(gev_logpdf(p, z)), lo, hi, limit=200)
    assert total == pytest.approx(1.0, abs=1e-4)
    assert err < 1e-6


def test_quantile_simple_points():
    assert gev_quantile(GevParams(0, 1, 0.0), EXP_NEG_ONE) == pytest.approx(0.0, abs=1e-12)
    assert gev_quantile(GevParams(0, 1, 0.5), EXP_NEG_ONE) == pytest.approx(0.0, abs=1e-12)


def test_quantile_reference_and_round_trip():
    p = GevParams(1, 2, -0.2)
    q95 = gev_quantile(p, 0.95)
    assert q95 == pytest.approx(QUANTILE_12M02_95, abs=1e-12)
    assert gev_cdf(p, q95) == pytest.approx(0.95, abs=1e-10)


@pytest.mark.parametrize("xi", [-0.4, -0.2, 0.0, 1e-8, 0.2, 0.4])
def test_quantile_cdf_round_trip_grid(xi):
    p = GevParams(0.3, 1.7, xi)
    probs = np.arange(0.001, 1.0, 0.001)
    back = gev_cdf(p, gev_quantile(p, probs))
    assert np.max(np.abs(back - probs)) < 1e-10


def test_quantile_rejects_bad_probability():
    with pytest.raises(ValueError):
        gev_quantile(GevParams(0, 1, 0.1), 0.0)
    with pytest.raises(ValueError):
        gev_quantile(GevParams(0, 1, 0.1), 1.0)


def test_return_level_is_high_quantile():
    p = GevParams(2.0, 0.5, 0.1)
    assert return_level(p, 20.0) == gev_quantile(p, 0.95)


def test_return_level_gumbel_reference():
    assert return_level(GevParams(0, 1, 0.0), 100.0) == pytest.approx(
        GUMBEL_LEVEL_T100, abs=1e-12
    )


def test_return_level_bounded_for_negative_shape():
    p = GevParams(0, 1, -0.25)
    bound = p.mu - p.sigma / p.xi
    for T in (2.0, 10.0, 100.0, 10_000.0):
        assert return_level(p, T) < bound


def test_return_level_rejects_short_period():
    with pytest.raises(ValueError):
        return_level(GevParams(0, 1, 0.1), 1.0)


def test_analytic_pwm_reference_values():
    p = GevParams(0, 1, 0.2)
    assert analytic_pwm(p, 0) == pytest.approx(PWM_02[0], abs=1e-14)
    assert analytic_pwm(p, 1) == pytest.approx(PWM_02[1], abs=1e-14)
    assert analytic_pwm(p, 2) == pytest.approx(PWM_02[2], abs=1e-14)
    assert analytic_pwm(p, 0) == pytest.approx(-5.0 * (1.0 - GAMMA_08), abs=1e-14)


def test_analytic_pwm_location_shift():
    base = GevParams(0, 1.5, -0.3)
    shifted = GevParams(2.5, 1.5, -0.3)
    for r in (0, 1, 2):
        assert analytic_pwm(shifted, r) == pytest.approx(
            2.5 / (r + 1) + analytic_pwm(base, r), abs=1e-12
        )


def test_analytic_pwm_rejects_gumbel_and_heavy_shapes():
    with pytest.raises(ValueError):
        analytic_pwm(GevParams(0, 1, 0.0), 0)
    with pytest.raises(ValueError):
        analytic_pwm(GevParams(0, 1, 1.0), 0)
    with pytest.raises(ValueError):
        analytic_pwm(GevParams(0, 1, 0.2), -1)


def test_analytic_pwm_matches_monte_carlo():
    """Closed form against a direct Monte Carlo mean of X * F(X)^r."""
    p = GevParams(0, 1, 0.2)
    rng = np.random.default_rng(20260822)
    u = rng.random(10**6)
    u[u == 0.0] = 0.5
    x = gev_quantile(p, u)
    for r in (0, 1, 2):
        sample = x * u**r
        se = sample.std(ddof=1) / math.sqrt(sample.size)
        assert abs(sample.mean() - analytic_pwm(p, r)) < 4.0 * se


def test_gumbel_limit_continuity():
    z = np.linspace(-5.0, 5.0, 2001)
    near = gev_cdf(GevParams(0, 1, XI_GUMBEL_EPS), z)
    exact = gev_cdf(GevParams(0, 1, 0.0), z)
    assert np.max(np.abs(near - exact)) < 1e-6


def test_params_validation():
    with pytest.raises(ValueError):
        GevParams(0.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        GevParams(0.0, -1.0, 0.1)
    with pytest.raises(ValueError):
        GevParams(math.nan, 1.0, 0.1)


@given(params=params_strategy, z=st.tuples(st.floats(-50, 50), st.floats(-50, 50)))
@settings(max_examples=80, deadline=None)
def test_cdf_monotone(params, z):
    lo, hi = min(z), max(z)
    assert gev_cdf(params, lo) <= gev_cdf(params, hi) + 1e-15


@given(params=params_strategy, p=st.floats(0.01, 0.99))
@settings(max_examples=80, deadline=None)
def test_round_trip_property(params, p):
    assert gev_cdf(params, gev_quantile(params, p)) == pytest.approx(p, abs=1e-9)
