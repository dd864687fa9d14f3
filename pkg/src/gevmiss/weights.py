"""Block weights reflecting how informative each observed maximum is.

With missing entries inside a block, the observed block maximum may
understate the true one.  Two downweighting schemes are provided: an
unconditional weight, the fraction of the block actually observed, and a
conditional weight, the probability that all missing entries of the block
fell at or below the observed maximum, estimated from the empirical
distribution of every observed value in the series.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from gevmiss.blocking import BlockSummary
from gevmiss.errors import ConfigError

logger = logging.getLogger(__name__)

WEIGHT_SCHEMES = ("observed", "unconditional", "conditional")


class EmpiricalCdf:
    """Right-continuous empirical distribution of a sample.

    Evaluation at x is the fraction of sample values <= x, so ties with a
    query point count toward the probability.
    """

    def __init__(self, sample: np.ndarray) -> None:
        sample = np.asarray(sample, dtype=float)
        if sample.ndim != 1 or sample.size == 0:
            raise ValueError("sample must be a nonempty 1-d array")
        if not np.all(np.isfinite(sample)):
            raise ValueError("sample contains non-finite values")
        self._sorted = np.sort(sample)
        self.n = sample.size

    def __call__(self, x):
        x_arr, scalar = np.atleast_1d(np.asarray(x, dtype=float)), np.isscalar(x) or np.ndim(x) == 0
        counts = np.searchsorted(self._sorted, np.atleast_1d(x_arr), side="right")
        out = counts / self.n
        return out.item() if scalar else out


@dataclass(frozen=True)
class BlockWeight:
    """A block's observed maximum paired with its weight."""

    index: int
    observed_max: float
    weight: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight must lie in [0, 1], got {self.weight}")


def unconditional_weight(summary: BlockSummary) -> float:
    """Fraction of the block that was observed: n_obs / (n_obs + n_miss)."""
    if summary.n_obs == 0:
        raise ValueError("block has no observed entries")
    return summary.n_obs / summary.size


def conditional_weight(summary: BlockSummary, ecdf: EmpiricalCdf) -> float:
    """Estimated probability that the observed max is the true block max.

    Missing entries are treated as independent draws from the empirical
    distribution of observed values, so the weight is Fhat(m)^n_miss.
    """
    if summary.n_obs == 0:
        raise ValueError("block has no observed entries")
    if summary.n_miss == 0:
        return 1.0
    return float(ecdf(summary.observed_max) ** summary.n_miss)


def weigh_blocks(
    summaries: list[BlockSummary],
    scheme: str,
    ecdf: EmpiricalCdf | None = None,
) -> list[BlockWeight]:
    """Assign a weight to each nonempty block under the given scheme.

    ``observed`` gives unit weight to every block with at least one
    observation (maxima enter the fit as if complete).  Blocks with no
    observed entry are skipped; the conditional scheme requires an
    empirical cdf built from all observed values in the series.
    """
    if scheme not in WEIGHT_SCHEMES:
        raise ConfigError(f"unknown weight scheme {scheme!r}; expected one of {WEIGHT_SCHEMES}")
    if scheme == "conditional" and ecdf is None:
        raise ConfigError("conditional weights require an empirical cdf of observed values")

    weights = []
    skipped = 0
    for s in summaries:
        if s.n_obs == 0:
            skipped += 1
            continue
        if scheme == "observed":
            w = 1.0
        elif scheme == "unconditional":
            w = unconditional_weight(s)
        else:
            w = conditional_weight(s, ecdf)
        weights.append(BlockWeight(index=s.index, observed_max=s.observed_max, weight=w))
    if skipped:
        logger.info("skipped %d empty block(s) while weighting", skipped)
    return weights
