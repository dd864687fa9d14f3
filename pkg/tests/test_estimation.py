"""Weighted likelihood and moment fitting.

Hand-expanded small cases pin the weighted formulas exactly; analytic
moment round trips and seeded Monte Carlo checks cover the inversion and
the optimizer.
"""

import math

import numpy as np
import pytest

from gevmiss import (
    GevParams,
    WeightedMaxima,
    analytic_pwm,
    fit_mle,
    fit_pwm,
    gev_logpdf,
    gev_quantile,
    pwm_b,
    pwm_moments,
    solve_xi,
    weighted_loglik,
)
from gevmiss.errors import NumericalError
from gevmiss.estimation import PwmMoments
from gevmiss.weights import BlockWeight

HAND_LOGLIK = -1.6839397205857212  # 1*(-1) + 0.5*(-1 - exp(-1)) for Gumbel(0,1)


def unit(maxima):
    maxima = np.asarray(maxima, dtype=float)
    return WeightedMaxima(maxima, np.ones(maxima.size))


def gev_sample(params, size, seed):
    u = np.random.default_rng(seed).random(size)
    u[u == 0.0] = 0.5
    return gev_quantile(params, u)


def three_point_sample(params):
    """Three unit-weight maxima whose sample moments equal the analytic
    b0, b1, b2 of ``params`` exactly (linear system solved by hand)."""
    b0, b1, b2 = (analytic_pwm(params, r) for r in (0, 1, 2))
    m3 = 3.0 * b2
    m2 = 6.0 * (b1 - b2)
    m1 = 3.0 * b0 - m2 - m3
    return unit([m1, m2, m3])


def test_weighted_maxima_validation():
    with pytest.raises(ValueError):
        WeightedMaxima(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        WeightedMaxima(np.array([]), np.array([]))
    with pytest.raises(ValueError):
        WeightedMaxima(np.array([1.0, np.nan]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        WeightedMaxima(np.array([1.0, 2.0]), np.array([1.0, 1.5]))
    with pytest.raises(ValueError):
        WeightedMaxima(np.array([1.0, 2.0]), np.array([0.0, 0.0]))


def test_weighted_maxima_sorting_keeps_pairs():
    data = WeightedMaxima(np.array([3.0, 1.0, 2.0]), np.array([0.3, 1.0, 0.6]))
    assert not data.is_sorted
    s = data.sorted()
    assert np.array_equal(s.maxima, [1.0, 2.0, 3.0])
    assert np.array_equal(s.weights, [1.0, 0.6, 0.3])
    assert data.k == 3


def test_from_blocks():
    blocks = [BlockWeight(0, 2.0, 1.0), BlockWeight(1, 5.0, 0.25)]
    data = WeightedMaxima.from_blocks(blocks)
    assert np.array_equal(data.maxima, [2.0, 5.0])
    assert np.array_equal(data.weights, [1.0, 0.25])


def test_weighted_loglik_hand_value():
    data = WeightedMaxima(np.array([0.0, 1.0]), np.array([1.0, 0.5]))
    value = weighted_loglik(GevParams(0, 1, 0.0), data)
    assert value == pytest.approx(HAND_LOGLIK, abs=1e-14)


def test_weighted_loglik_unit_weights_reduce_exactly():
    maxima = gev_sample(GevParams(0, 1, 0.1), 40, seed=2)
    data = unit(maxima)
    assert weighted_loglik(GevParams(0.1, 1.2, 0.05), data) == float(
        np.sum(gev_logpdf(GevParams(0.1, 1.2, 0.05), maxima))
    )


def test_weighted_loglik_half_weights_halve():
    maxima = gev_sample(GevParams(0, 1, 0.1), 40, seed=3)
    p = GevParams(0.1, 1.2, 0.05)
    full = weighted_loglik(p, unit(maxima))
    half = weighted_loglik(p, WeightedMaxima(maxima, np.full(40, 0.5)))
    assert half == pytest.approx(0.5 * full, rel=1e-14)


def test_weighted_loglik_penalises_outside_support():
    # one point below the lower endpoint of a xi > 0 fit
    data = WeightedMaxima(np.array([-50.0, 1.0, 2.0]), np.array([1.0, 1.0, 1.0]))
    value = weighted_loglik(GevParams(0, 1, 0.5), data)
    assert value < -1e9
    assert math.isfinite(value)


def test_pwm_b_hand_values():
    pair = unit([1.0, 3.0])
    assert pwm_b(pair, 0) == 2.0
    assert pwm_b(pair, 1) == 1.5
    weighted = WeightedMaxima(np.array([1.0, 3.0]), np.array([1.0, 0.5]))
    assert pwm_b(weighted, 1) == 1.0


def test_pwm_b_unit_weights_equal_classical_estimator():
    maxima = np.sort(gev_sample(GevParams(0, 1, 0.1), 30, seed=4))
    data = unit(maxima)
    k = maxima.size
    j = np.arange(1, k + 1, dtype=float)
    for r in (0, 1, 2):
        factor = np.ones(k)
        for l in range(1, r + 1):
            factor *= (j - l) / (k - l)
        assert pwm_b(data, r) == float(np.sum(factor * maxima) / k)


def test_pwm_b_requires_sorted_input_and_valid_order():
    data = WeightedMaxima(np.array([3.0, 1.0, 2.0]), np.ones(3))
    with pytest.raises(ValueError):
        pwm_b(data, 0)
    with pytest.raises(ValueError):
        pwm_b(unit([1.0, 2.0]), 2)
    with pytest.raises(ValueError):
        pwm_b(unit([1.0, 2.0, 3.0]), 3)


def test_pwm_moments_collects_three_orders():
    data = unit(np.sort(gev_sample(GevParams(0, 1, 0.1), 20, seed=5)))
    m = pwm_moments(data)
    assert (m.b0, m.b1, m.b2) == (pwm_b(data, 0), pwm_b(data, 1), pwm_b(data, 2))
    assert m.ratios_valid
    assert not PwmMoments(1.0, 0.4, 0.2).ratios_valid


def test_pwm_downward_bias_under_degraded_maxima():
    """Replacing maxima by lower order statistics can only lower the
    expected moment estimate; for Uniform(0,1) blocks of n the complete
    value is n / (n(1+r) + 1).

    The degraded subset is redrawn each replicate.  A subset held fixed
    against a fixed weight vector couples weights to degradation and the
    inequality genuinely fails, so exchangeability is part of the claim.
    """
    n, k, reps = 20, 30, 400
    rng = np.random.default_rng(99)
    weights = np.random.default_rng(5).uniform(0.2, 1.0, size=k)
    sums = {r: [] for r in (0, 1, 2)}
    for _ in range(reps):
        blocks = np.sort(rng.random((k, n)), axis=1)
        maxima = blocks[:, -1].copy()
        hit = rng.choice(k, size=12, replace=False)
        maxima[hit] = blocks[hit, -2]
        data = WeightedMaxima(maxima, weights).sorted()
        for r in (0, 1, 2):
            sums[r].append(pwm_b(data, r))
    for r in (0, 1, 2):
        values = np.array(sums[r])
        se = values.std(ddof=1) / math.sqrt(reps)
        complete = n / (n * (1 + r) + 1)
        assert values.mean() <= complete + 4.0 * se


def test_solve_xi_gumbel_ratio():
    g = np.euler_gamma
    xi = solve_xi(g, (g + math.log(2.0)) / 2.0, (g + math.log(3.0)) / 3.0)
    assert abs(xi) < 1e-9


@pytest.mark.parametrize("params", [GevParams(0, 1, 0.2), GevParams(3, 2, -0.3)])
def test_solve_xi_round_trip(params):
    b = [analytic_pwm(params, r) for r in (0, 1, 2)]
    assert solve_xi(*b) == pytest.approx(params.xi, abs=1e-8)


def test_solve_xi_rejects_unattainable_ratios():
    with pytest.raises(NumericalError):
        solve_xi(4.0, 3.5, 10.0 / 3.0)  # ratio 2, above the range
    with pytest.raises(NumericalError):
        solve_xi(5.0 / 3.0, 1.0, 2.0 / 3.0)  # ratio 1, below the range
    with pytest.raises(NumericalError):
        solve_xi(2.0, 1.0, 1.0)  # 2*b1 - b0 = 0


def test_fit_pwm_recovers_analytic_moments():
    report = fit_pwm(three_point_sample(GevParams(0, 1, 0.2)))
    assert report.converged
    assert report.objective is None
    assert report.params.mu == pytest.approx(0.0, abs=1e-6)
    assert report.params.sigma == pytest.approx(1.0, abs=1e-6)
    assert report.params.xi == pytest.approx(0.2, abs=1e-6)


def test_fit_pwm_monte_carlo_consistency():
    truth = GevParams(1.0, 0.5, -0.2)
    report = fit_pwm(unit(gev_sample(truth, 10_000, seed=6)))
    assert abs(report.params.mu - truth.mu) < 0.05
    assert abs(report.params.xi - truth.xi) < 0.05
    assert abs(report.params.sigma - truth.sigma) / truth.sigma < 0.05


def test_fit_pwm_permutation_invariance():
    maxima = gev_sample(GevParams(0, 1, 0.1), 50, seed=7)
    weights = np.random.default_rng(8).uniform(0.3, 1.0, 50)
    base = fit_pwm(WeightedMaxima(maxima, weights))
    desc = np.argsort(-maxima)
    flipped = fit_pwm(WeightedMaxima(maxima[desc], weights[desc]))
    assert flipped.params == base.params


def test_fit_pwm_weight_scaling_invariance():
    maxima = gev_sample(GevParams(0, 1, 0.1), 50, seed=9)
    weights = np.random.default_rng(10).uniform(0.4, 1.0, 50)
    a = fit_pwm(WeightedMaxima(maxima, weights))
    b = fit_pwm(WeightedMaxima(maxima, 0.5 * weights))
    assert a.params == b.params


def test_fit_pwm_needs_three_maxima():
    with pytest.raises(ValueError):
        fit_pwm(unit([1.0, 2.0]))


def test_fit_mle_monte_carlo_consistency():
    truth = GevParams(0.0, 1.0, 0.1)
    report = fit_mle(unit(gev_sample(truth, 5000, seed=11)))
    assert report.converged
    assert report.objective is not None
    assert report.iterations > 0
    assert abs(report.params.mu - truth.mu) < 0.05
    assert abs(report.params.sigma - truth.sigma) < 0.05
    assert abs(report.params.xi - truth.xi) < 0.05


def test_fit_mle_weight_scaling_invariance():
    maxima = gev_sample(GevParams(0, 1, 0.1), 60, seed=12)
    weights = np.random.default_rng(13).uniform(0.3, 1.0, 60)
    a = fit_mle(WeightedMaxima(maxima, weights))
    b = fit_mle(WeightedMaxima(maxima, 0.5 * weights))
    assert a.params.mu == pytest.approx(b.params.mu, abs=1e-6)
    assert a.params.sigma == pytest.approx(b.params.sigma, abs=1e-6)
    assert a.params.xi == pytest.approx(b.params.xi, abs=1e-6)


def test_fit_mle_permutation_invariance():
    maxima = gev_sample(GevParams(0, 1, 0.1), 40, seed=14)
    weights = np.random.default_rng(15).uniform(0.3, 1.0, 40)
    base = fit_mle(WeightedMaxima(maxima, weights))
    perm = np.random.default_rng(16).permutation(40)
    other = fit_mle(WeightedMaxima(maxima[perm], weights[perm]))
    assert other.params == base.params


def test_fit_mle_gradient_small_at_optimum():
    data = unit(gev_sample(GevParams(0, 1, 0.1), 200, seed=17))
    report = fit_mle(data)
    assert report.converged
    p = report.params
    h = 1e-5
    grad = [
        (
            weighted_loglik(GevParams(p.mu + h, p.sigma, p.xi), data)
            - weighted_loglik(GevParams(p.mu - h, p.sigma, p.xi), data)
        )
        / (2 * h),
        (
            weighted_loglik(GevParams(p.mu, p.sigma + h, p.xi), data)
            - weighted_loglik(GevParams(p.mu, p.sigma - h, p.xi), data)
        )
        / (2 * h),
        (
            weighted_loglik(GevParams(p.mu, p.sigma, p.xi + h), data)
            - weighted_loglik(GevParams(p.mu, p.sigma, p.xi - h), data)
        )
        / (2 * h),
    ]
    assert max(abs(g) for g in grad) < 1e-4 * (1.0 + abs(report.objective))


def test_fit_mle_rejects_small_or_degenerate_input():
    with pytest.raises(ValueError):
        fit_mle(unit([1.0, 2.0]))
    with pytest.raises(ValueError):
        fit_mle(WeightedMaxima(np.arange(5.0), np.array([1.0, 1.0, 0.0, 0.0, 0.0])))
    with pytest.raises(NumericalError):
        fit_mle(unit([2.0, 2.0, 2.0, 2.0]))


def test_fit_mle_zero_weight_points_do_not_matter():
    rng = np.random.default_rng(18)
    maxima = gev_sample(GevParams(0, 1, 0.1), 30, seed=19)
    weights = rng.uniform(0.5, 1.0, 30)
    with_extra = WeightedMaxima(
        np.append(maxima, [99.0]), np.append(weights, [0.0])
    )
    plain = WeightedMaxima(maxima, weights)
    a, b = fit_mle(with_extra), fit_mle(plain)
    # same objective surface, different start point: agreement is limited
    # by the simplex tolerance, not exact
    assert a.params.mu == pytest.approx(b.params.mu, abs=1e-4)
    assert a.params.sigma == pytest.approx(b.params.sigma, abs=1e-4)
    assert a.params.xi == pytest.approx(b.params.xi, abs=1e-4)
