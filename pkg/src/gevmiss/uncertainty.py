"""Bootstrap standard errors for return-level estimates.

Resampling is of (maximum, weight) pairs with replacement: weights are
part of the data, never recomputed per resample.  Divergent refits are
excluded from the spread and counted, since a standard deviation taken
over numerically exploded replicates measures the explosion, not the
sampling uncertainty.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from gevmiss.distribution import return_level
from gevmiss.errors import ConfigError, NumericalError
from gevmiss.estimation import FitReport, WeightedMaxima, fit_mle, fit_pwm

logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e6
MAX_REDRAWS = 1000


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count, resample-size floor, seed, and return periods."""

    B: int = 1000
    min_k: int = 4
    seed: int = 0
    T_list: tuple[float, ...] = (20.0, 50.0, 100.0)

    def __post_init__(self) -> None:
        if self.B < 2:
            raise ConfigError(f"need at least 2 bootstrap replicates, got {self.B}")
        if self.min_k < 3:
            raise ConfigError(f"min_k must be at least 3, got {self.min_k}")
        if not self.T_list:
            raise ConfigError("T_list must not be empty")
        if any(t <= 1.0 for t in self.T_list):
            raise ConfigError("return periods must exceed 1")


@dataclass(frozen=True)
class ReturnLevelEstimate:
    """Point estimate for one return period and its bootstrap spread."""

    T: float
    level: float
    se: float
    replicates_used: int

    def __post_init__(self) -> None:
        if self.se < 0.0:
            raise ValueError("standard error cannot be negative")


def _fitter(method: str):
    if method == "mle":
        return fit_mle
    if method == "pwm":
        return fit_pwm
    raise ConfigError(f"unknown method {method!r}; expected 'mle' or 'pwm'")


def _levels(report: FitReport, T_list: tuple[float, ...]) -> np.ndarray:
    return np.array([return_level(report.params, t) for t in T_list])


def bootstrap_return_levels(
    data: WeightedMaxima, method: str, cfg: BootstrapConfig
) -> list[ReturnLevelEstimate]:
    """Point return levels from the full data plus bootstrap SEs.

    Each replicate resamples k pairs with replacement, redrawing until at
    least min_k distinct pairs with positive weight are present, then
    refits.  Replicates whose refit does not converge, or whose levels
    exceed 1e6 times the data scale, are dropped and counted; fewer than
    10% surviving replicates raises NumericalError.
    """
    fit = _fitter(method)
    k = data.k
    if k < cfg.min_k:
        raise ValueError(f"bootstrap needs at least {cfg.min_k} maxima, got {k}")

    point = fit(data)
    point_levels = _levels(point, cfg.T_list)
    scale = max(float(np.max(np.abs(data.maxima))), 1.0)

    kept: list[np.ndarray] = []
    failed = 0
    for b in range(cfg.B):
        rng = np.random.default_rng([cfg.seed, b])
        resample = None
        for _ in range(MAX_REDRAWS):
            idx = rng.integers(0, k, size=k)
            usable = idx[data.weights[idx] > 0.0]
            if np.unique(usable).size >= cfg.min_k:
                resample = WeightedMaxima(data.maxima[idx], data.weights[idx])
                break
        if resample is None:
            failed += 1
            continue
        try:
            report = fit(resample)
        except (ValueError, NumericalError):
            failed += 1
            continue
        if not report.converged:
            failed += 1
            continue
        levels = _levels(report, cfg.T_list)
        if np.any(np.abs(levels) > DIVERGENCE_FACTOR * scale):
            failed += 1
            continue
        kept.append(levels)

    if len(kept) < 2 or len(kept) < 0.1 * cfg.B:
        raise NumericalError(
            f"bootstrap failed: only {len(kept)} of {cfg.B} replicates usable"
        )
    if failed:
        logger.info("bootstrap dropped %d of %d replicates", failed, cfg.B)
    spread = np.std(np.vstack(kept), axis=0, ddof=1)
    return [
        ReturnLevelEstimate(
            T=float(t),
            level=float(point_levels[i]),
            se=float(spread[i]),
            replicates_used=len(kept),
        )
        for i, t in enumerate(cfg.T_list)
    ]
