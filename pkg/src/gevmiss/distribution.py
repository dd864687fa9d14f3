"""Generalized extreme value distribution primitives.

CDF, log-density, quantile, return levels, and the closed-form
probability-weighted moments of a GEV(mu, sigma, xi) law.  The sign
convention is xi > 0 for the heavy-tailed (Fréchet) type and xi < 0 for
the bounded (Weibull) type; note this is opposite to scipy's ``c``.

All operations are pure and accept scalars or numpy arrays for the data
argument, returning a matching shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma_fn

# Below this |xi| the xi != 0 branch loses all precision to cancellation,
# so the Gumbel limit form is evaluated instead.
XI_GUMBEL_EPS = 1e-8


@dataclass(frozen=True)
class GevParams:
    """Location, scale, and shape of a GEV distribution.

    ``sigma`` must be strictly positive and all fields finite.  Validity
    regions tied to specific estimators (xi > -1 for likelihood fitting,
    xi < 0.5 for moment-based normality) are enforced by the estimators,
    not here.
    """

    mu: float
    sigma: float
    xi: float

    def __post_init__(self) -> None:
        for name in ("mu", "sigma", "xi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"GEV parameter {name} must be finite, got {getattr(self, name)!r}")
        if self.sigma <= 0:
            raise ValueError(f"GEV scale must be positive, got sigma={self.sigma!r}")


def _prepare(z, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    scalar = arr.ndim == 0
    return np.atleast_1d(arr), scalar


def gev_cdf(params: GevParams, z) -> float | np.ndarray:
    """Evaluate the GEV cumulative distribution function at ``z``.

    Outside the support the CDF is clamped: 0 below the lower endpoint
    (xi > 0) and 1 above the upper endpoint (xi < 0).
    """
    zz, scalar = _prepare(z, "z")
    y = (zz - params.mu) / params.sigma
    # deep-tail exponentials may saturate to inf; the limit value is right
    with np.errstate(over="ignore"):
        if abs(params.xi) < XI_GUMBEL_EPS:
            out = np.exp(-np.exp(-y))
        else:
            t_arg = params.xi * y
            inside = t_arg > -1.0
            # clamp outside the support; exp(-(1 + xi*y)^(-1/xi)) via log1p
            # to stay accurate near xi -> 0
            out = np.full(y.shape, 0.0 if params.xi > 0 else 1.0)
            out[inside] = np.exp(-np.exp(-np.log1p(t_arg[inside]) / params.xi))
    return out.item() if scalar else out


def gev_logpdf(params: GevParams, z) -> float | np.ndarray:
    """Evaluate the GEV log-density at ``z``.

    Points outside the support are not an error: they return ``-inf`` so
    optimizers can substitute a finite penalty.
    """
    zz, scalar = _prepare(z, "z")
    y = (zz - params.mu) / params.sigma
    log_sigma = math.log(params.sigma)
    # deep-tail exponentials may saturate to inf, giving the -inf limit
    with np.errstate(over="ignore"):
        if abs(params.xi) < XI_GUMBEL_EPS:
            out = -log_sigma - y - np.exp(-y)
        else:
            t_arg = params.xi * y
            inside = t_arg > -1.0
            out = np.full(y.shape, -np.inf)
            log_t = np.log1p(t_arg[inside])
            out[inside] = (
                -log_sigma - (1.0 + 1.0 / params.xi) * log_t - np.exp(-log_t / params.xi)
            )
    return out.item() if scalar else out


def gev_quantile(params: GevParams, p) -> float | np.ndarray:
    """Invert the GEV CDF at probability ``p`` in (0, 1)."""
    pp, scalar = _prepare(p, "p")
    if np.any((pp <= 0.0) | (pp >= 1.0)):
        raise ValueError("quantile probability must lie strictly in (0, 1)")
    log_gumbel = -np.log(-np.log(pp))  # standard Gumbel quantile
    if abs(params.xi) < XI_GUMBEL_EPS:
        out = params.mu + params.sigma * log_gumbel
    else:
        # ((-log p)^(-xi) - 1)/xi computed as expm1(xi * gumbel)/xi
        out = params.mu + params.sigma * np.expm1(params.xi * log_gumbel) / params.xi
    return out.item() if scalar else out


def return_level(params: GevParams, T) -> float | np.ndarray:
    """Level exceeded once per ``T`` blocks on average: the 1 - 1/T quantile."""
    tt, scalar = _prepare(T, "T")
    if np.any(tt <= 1.0):
        raise ValueError("return period must exceed 1 block")
    out = np.atleast_1d(gev_quantile(params, 1.0 - 1.0 / tt))
    return out.item() if scalar else out


def analytic_pwm(params: GevParams, r: int) -> float:
    """Closed-form probability-weighted moment E{X F(X)^r} of the GEV law.

    Defined for xi < 1 with xi != 0; the Gumbel case has no closed form
    of this shape and is rejected.
    """
    if r < 0 or r != int(r):
        raise ValueError(f"moment order r must be a nonnegative integer, got {r!r}")
    if params.xi >= 1.0 or params.xi == 0.0:
        raise ValueError(f"analytic PWM requires xi < 1 and xi != 0, got xi={params.xi!r}")
    rp1 = r + 1
    g = float(_gamma_fn(1.0 - params.xi))
    return (params.mu - (params.sigma / params.xi) * (1.0 - rp1**params.xi * g)) / rp1
