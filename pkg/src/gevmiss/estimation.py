"""Weighted fitting of GEV parameters to block maxima.

Two estimators operate on (maximum, weight) pairs: maximum likelihood,
where each block's log-density enters the objective scaled by its weight,
and probability-weighted moments, where the weights replace the uniform
1/k averaging in the order-statistic moment estimates.  Unit weights
recover the classical unweighted estimators exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gamma as _gamma

from gevmiss.distribution import XI_GUMBEL_EPS, GevParams, gev_logpdf
from gevmiss.errors import NumericalError
from gevmiss.weights import BlockWeight

SUPPORT_PENALTY = -1e10
XI_SEARCH_LO = -0.99
XI_SEARCH_HI = 0.98
_LOG2 = math.log(2.0)
_LOG3 = math.log(3.0)


@dataclass
class WeightedMaxima:
    """Block maxima with attached weights in [0, 1].

    Sorting travels as a pair operation so each weight stays glued to its
    maximum.  At least one weight must be positive; fitters additionally
    require k >= 3.
    """

    maxima: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        self.maxima = np.asarray(self.maxima, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.maxima.ndim != 1 or self.maxima.shape != self.weights.shape:
            raise ValueError("maxima and weights must be 1-d arrays of equal length")
        if self.maxima.size == 0:
            raise ValueError("need at least one maximum")
        if not (np.all(np.isfinite(self.maxima)) and np.all(np.isfinite(self.weights))):
            raise ValueError("maxima and weights must be finite")
        if np.any(self.weights < 0.0) or np.any(self.weights > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        if not np.any(self.weights > 0.0):
            raise ValueError("at least one weight must be positive")

    @classmethod
    def from_blocks(cls, blocks: list[BlockWeight]) -> WeightedMaxima:
        return cls(
            np.array([b.observed_max for b in blocks], dtype=float),
            np.array([b.weight for b in blocks], dtype=float),
        )

    @property
    def k(self) -> int:
        return self.maxima.size

    @property
    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.maxima) >= 0.0))

    def sorted(self) -> WeightedMaxima:
        """Copy with pairs ordered by ascending maximum (stable)."""
        order = np.argsort(self.maxima, kind="stable")
        return WeightedMaxima(self.maxima[order], self.weights[order])


@dataclass(frozen=True)
class PwmMoments:
    """First three probability-weighted moment estimates b0, b1, b2."""

    b0: float
    b1: float
    b2: float

    @property
    def ratios_valid(self) -> bool:
        """Whether 2*b1 - b0 and 3*b2 - b0 are positive, as the moment
        relations for a nondegenerate sample require."""
        return 2.0 * self.b1 - self.b0 > 0.0 and 3.0 * self.b2 - self.b0 > 0.0


@dataclass(frozen=True)
class FitReport:
    """Outcome of a fit: parameters plus convergence bookkeeping.

    ``objective`` is the weighted log-likelihood at the optimum for ML
    fits and None for moment fits.
    """

    params: GevParams
    converged: bool
    objective: float | None
    iterations: int
    warnings: list[str] = field(default_factory=list)


def weighted_loglik(params: GevParams, data: WeightedMaxima) -> float:
    """Sum of per-block log-densities, each scaled by its block weight.

    Points outside the distribution's support contribute a large finite
    penalty instead of -inf so optimizers see a usable surface; the
    penalty is applied before weighting (0 * -inf would poison the sum).
    """
    logpdf = np.atleast_1d(gev_logpdf(params, data.maxima))
    logpdf = np.where(np.isfinite(logpdf), logpdf, SUPPORT_PENALTY)
    return float(np.sum(data.weights * logpdf))


def pwm_b(data: WeightedMaxima, r: int) -> float:
    """Weighted estimate of the order-r probability-weighted moment.

    With ascending ranks j = 1..k,

        b_r = (1 / sum_j w_j) * sum_j w_j * prod_{l=1..r} (j-l)/(k-l) * m_(j)

    unit weights make the prefactor 1/k and recover the classical
    unbiased order-statistic estimator.  The data must arrive sorted
    ascending; rank products are meaningless otherwise.
    """
    if r not in (0, 1, 2):
        raise ValueError(f"moment order must be 0, 1, or 2, got {r}")
    k = data.k
    if k <= r:
        raise ValueError(f"order-{r} moment needs more than {r} maxima, got {k}")
    if not data.is_sorted:
        raise ValueError("maxima must be sorted ascending; use .sorted() first")
    j = np.arange(1, k + 1, dtype=float)
    factor = np.ones(k)
    for l in range(1, r + 1):
        factor *= (j - l) / (k - l)
    return float(np.sum(data.weights * factor * data.maxima) / np.sum(data.weights))


def pwm_moments(data: WeightedMaxima) -> PwmMoments:
    """b0, b1, b2 of sorted weighted maxima in one call."""
    return PwmMoments(pwm_b(data, 0), pwm_b(data, 1), pwm_b(data, 2))


def _moment_ratio(xi: float) -> float:
    # (3^xi - 1)/(2^xi - 1), continuously extended to log3/log2 at xi = 0
    if abs(xi) < 1e-12:
        return _LOG3 / _LOG2
    return math.expm1(xi * _LOG3) / math.expm1(xi * _LOG2)


def _solve_xi_bisect(b0: float, b1: float, b2: float) -> tuple[float, int]:
    d2 = 2.0 * b1 - b0
    if d2 <= 0.0:
        raise NumericalError(f"2*b1 - b0 = {d2:.6g} must be positive to identify the shape")
    target = (3.0 * b2 - b0) / d2
    lo, hi = XI_SEARCH_LO, XI_SEARCH_HI
    # the ratio is strictly increasing in xi, so range membership is a
    # two-endpoint check
    if target < _moment_ratio(lo) or target > _moment_ratio(hi):
        raise NumericalError(
            f"moment ratio {target:.6g} outside the attainable range "
            f"[{_moment_ratio(lo):.6g}, {_moment_ratio(hi):.6g}] "
            f"for shapes in ({lo}, {hi})"
        )
    # quadratic approximation (Hosking) centres a narrow bracket; fall
    # back to the full interval when it misses
    c = d2 / (3.0 * b2 - b0) - _LOG2 / _LOG3
    xi0 = -(7.8590 * c + 2.9554 * c * c)
    a = max(lo, xi0 - 0.25)
    b = min(hi, xi0 + 0.25)
    if _moment_ratio(a) > target or _moment_ratio(b) < target:
        a, b = lo, hi
    iters = 0
    while b - a > 1e-10 and iters < 200:
        mid = 0.5 * (a + b)
        if _moment_ratio(mid) <= target:
            a = mid
        else:
            b = mid
        iters += 1
    return 0.5 * (a + b), iters


def solve_xi(b0: float, b1: float, b2: float) -> float:
    """Shape parameter matching the (3b2-b0)/(2b1-b0) moment ratio.

    Solved by bisection to an interval below 1e-10 wide; the search is
    restricted to (-0.99, 0.98), where the moment relations are usable.
    Raises NumericalError when the ratio cannot be attained there.
    """
    xi, _ = _solve_xi_bisect(b0, b1, b2)
    return xi


def fit_pwm(data: WeightedMaxima) -> FitReport:
    """Fit by weighted probability-weighted moments.

    Pairs are sorted internally, b0..b2 estimated, the shape solved from
    the moment ratio, then scale and location recovered in closed form:

        sigma = xi (2b1 - b0) / [Gamma(1-xi) (2^xi - 1)]
        mu    = b0 + (sigma/xi) (1 - Gamma(1-xi))

    with the usual limits (2b1-b0)/log2 and b0 - gamma_E*sigma as xi -> 0.
    """
    if data.k < 3:
        raise ValueError(f"moment fit needs at least 3 maxima, got {data.k}")
    s = data.sorted()
    moments = pwm_moments(s)
    xi, iters = _solve_xi_bisect(moments.b0, moments.b1, moments.b2)
    d2 = 2.0 * moments.b1 - moments.b0
    if abs(xi) < XI_GUMBEL_EPS:
        sigma = d2 / _LOG2
        mu = moments.b0 - np.euler_gamma * sigma
    else:
        g = _gamma(1.0 - xi)
        sigma = xi * d2 / (g * math.expm1(xi * _LOG2))
        mu = moments.b0 + sigma / xi * (1.0 - g)
    if not math.isfinite(sigma) or sigma <= 0.0:
        raise NumericalError(f"degenerate scale estimate {sigma:.6g} from moment fit")
    warnings: list[str] = []
    converged = True
    if xi >= XI_SEARCH_HI or xi <= XI_SEARCH_LO:
        converged = False
        warnings.append("shape estimate pinned at the search boundary")
    return FitReport(
        params=GevParams(float(mu), float(sigma), float(xi)),
        converged=converged,
        objective=None,
        iterations=iters,
        warnings=warnings,
    )


def _moment_start(data: WeightedMaxima) -> GevParams:
    w = data.weights / np.sum(data.weights)
    mean = float(np.sum(w * data.maxima))
    sd = float(np.sqrt(np.sum(w * (data.maxima - mean) ** 2)))
    sigma0 = sd * math.sqrt(6.0) / math.pi
    return GevParams(mean - np.euler_gamma * sigma0, sigma0, 0.1)


def _initial_params(data: WeightedMaxima) -> tuple[GevParams, str | None]:
    try:
        p = fit_pwm(data).params
    except (NumericalError, ValueError):
        return _moment_start(data), "moment fit failed for the start point; used Gumbel moment start"
    active = data.maxima[data.weights > 0.0]
    t = 1.0 + p.xi * (active - p.mu) / p.sigma
    if np.count_nonzero(t > 0.0) < 3:
        return _moment_start(data), "moment start left data outside the support; used Gumbel moment start"
    return p, None


def fit_mle(
    data: WeightedMaxima,
    *,
    init: GevParams | None = None,
    maxiter: int = 2000,
) -> FitReport:
    """Fit by weighted maximum likelihood.

    A Nelder-Mead simplex runs on (mu, log sigma, xi); the log scale
    keeps sigma positive without constraints.  Started from the moment
    fit when it succeeds and covers the data, else from a Gumbel moment
    start.  Non-convergence is reported, not raised; a shape estimate at
    or beyond the trusted range (-0.99, 0.98) also clears the converged
    flag.
    """
    if data.k < 3:
        raise ValueError(f"likelihood fit needs at least 3 maxima, got {data.k}")
    if int(np.count_nonzero(data.weights > 0.0)) < 3:
        raise ValueError("likelihood fit needs at least 3 positive weights")
    s = data.sorted()
    active = s.maxima[s.weights > 0.0]
    if np.ptp(active) == 0.0:
        raise NumericalError("all weighted maxima identical; scale degenerates to zero")

    warnings: list[str] = []
    if init is None:
        init, note = _initial_params(s)
        if note:
            warnings.append(note)
    x0 = np.array([init.mu, math.log(init.sigma), init.xi])

    def negloglik(x: np.ndarray) -> float:
        # cap log sigma so a wandering simplex cannot overflow exp
        p = GevParams(float(x[0]), math.exp(min(float(x[1]), 700.0)), float(x[2]))
        return -weighted_loglik(p, s)

    res = minimize(
        negloglik,
        x0,
        method="Nelder-Mead",
        options={"maxiter": maxiter, "maxfev": 2 * maxiter, "fatol": 1e-10, "xatol": 1e-8},
    )
    params = GevParams(
        float(res.x[0]), math.exp(min(float(res.x[1]), 700.0)), float(res.x[2])
    )
    converged = bool(res.success)
    if not res.success:
        warnings.append("simplex search did not converge within the iteration budget")
    if params.xi >= XI_SEARCH_HI or params.xi <= XI_SEARCH_LO:
        converged = False
        warnings.append(
            f"shape estimate {params.xi:.4f} outside the trusted range "
            f"({XI_SEARCH_LO}, {XI_SEARCH_HI})"
        )
    return FitReport(
        params=params,
        converged=converged,
        objective=float(-res.fun),
        iterations=int(res.nit),
        warnings=warnings,
    )
