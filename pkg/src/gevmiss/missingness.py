"""Deletion mechanisms that turn a complete series into a flagged one.

Three mechanisms cover the usual taxonomy: MCAR deletes uniformly at
random inside randomly chosen blocks, MAR deletes with a probability that
rises along the series according to a Normal cdf in the time index, and
MNAR deletes the largest values of chosen blocks so that any treated
block necessarily loses its true maximum.  Values are never altered,
only observed flags flip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from gevmiss.blocking import FlaggedSeries
from gevmiss.errors import ConfigError

MECHANISMS = ("mcar", "mar", "mnar")


@dataclass(frozen=True)
class MissingnessSpec:
    """Parameters of one deletion mechanism.

    pbm and pm drive the block-level mechanisms (fraction of blocks
    treated, within-block deletion level); apm drives MAR as the target
    series-average missing fraction.  deterministic_counts replaces
    binomial within-block counts by exact round(pm * n) deletions, for
    tests that need fixed counts.
    """

    mechanism: str
    pbm: float | None = None
    pm: float | None = None
    apm: float | None = None
    mar_spread: float = 0.2
    deterministic_counts: bool = False

    def __post_init__(self) -> None:
        if self.mechanism not in MECHANISMS:
            raise ConfigError(f"unknown mechanism {self.mechanism!r}; expected one of {MECHANISMS}")
        if self.mechanism in ("mcar", "mnar"):
            if self.pbm is None or self.pm is None:
                raise ConfigError(f"{self.mechanism} requires pbm and pm")
            if not 0.0 <= self.pbm <= 1.0:
                raise ConfigError(f"pbm must lie in [0, 1], got {self.pbm}")
            if not 0.0 <= self.pm <= 1.0:
                raise ConfigError(f"pm must lie in [0, 1], got {self.pm}")
        else:
            if self.apm is None:
                raise ConfigError("mar requires apm")
            if not 0.0 < self.apm < 1.0:
                raise ConfigError(f"apm must lie strictly in (0, 1), got {self.apm}")
            if self.mar_spread <= 0.0:
                raise ConfigError(f"mar_spread must be positive, got {self.mar_spread}")


def _delete(series: FlaggedSeries, kill: np.ndarray) -> FlaggedSeries:
    observed = series.observed.copy()
    observed[kill] = False
    ts = None if series.timestamps is None else series.timestamps.copy()
    return FlaggedSeries(series.values.copy(), observed, ts)


def _blocked_shape(series: FlaggedSeries, n: int) -> int:
    if n < 1:
        raise ConfigError(f"block size must be at least 1, got {n}")
    if len(series) % n != 0:
        raise ConfigError(f"series length {len(series)} is not divisible by block size {n}")
    return len(series) // n


def _pick_blocks(k: int, pbm: float, rng: np.random.Generator) -> np.ndarray:
    count = int(round(pbm * k))
    return rng.choice(k, size=count, replace=False)


def apply_mcar(
    series: FlaggedSeries, n: int, spec: MissingnessSpec, rng: np.random.Generator
) -> FlaggedSeries:
    """Delete value-blind within round(pbm*k) randomly chosen blocks.

    Inside a treated block each entry goes missing independently with
    probability pm, or exactly round(pm*n) uniformly chosen entries
    under deterministic counts.
    """
    if spec.mechanism != "mcar":
        raise ConfigError(f"apply_mcar called with mechanism {spec.mechanism!r}")
    k = _blocked_shape(series, n)
    kill = np.zeros(len(series), dtype=bool)
    for j in _pick_blocks(k, spec.pbm, rng):
        start = int(j) * n
        if spec.deterministic_counts:
            c = int(round(spec.pm * n))
            hit = rng.choice(n, size=c, replace=False)
            kill[start + hit] = True
        else:
            kill[start : start + n] = rng.random(n) < spec.pm
    return _delete(series, kill)


def calibrate_mar(apm: float, mar_spread: float, n_total: int) -> float:
    """Centre c of the MAR deletion curve hitting a target average.

    Deletion probability at position i of N is Phi((u_i - c)/spread)
    with u_i = (i - 0.5)/N; c is found by bisection on [-5, 6], where the
    average is strictly decreasing in c, until the average matches apm to
    1e-8.
    """
    if not 0.0 < apm < 1.0:
        raise ConfigError(f"apm must lie strictly in (0, 1), got {apm}")
    if mar_spread <= 0.0:
        raise ConfigError(f"mar_spread must be positive, got {mar_spread}")
    u = (np.arange(1, n_total + 1) - 0.5) / n_total

    def mean_prob(c: float) -> float:
        return float(np.mean(ndtr((u - c) / mar_spread)))

    lo, hi = -5.0, 6.0
    if not mean_prob(lo) >= apm >= mean_prob(hi):
        raise ConfigError(
            f"target average {apm} unreachable for spread {mar_spread}: "
            f"attainable range is [{mean_prob(hi):.3g}, {mean_prob(lo):.3g}]"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        value = mean_prob(mid)
        if abs(value - apm) <= 1e-8:
            return mid
        if value > apm:
            lo = mid
        else:
            hi = mid
    raise ConfigError("calibration did not reach the 1e-8 tolerance")


def apply_mar(
    series: FlaggedSeries, spec: MissingnessSpec, rng: np.random.Generator
) -> FlaggedSeries:
    """Delete with probability rising along the series.

    Position i is deleted independently with probability
    Phi((u_i - c)/spread), nondecreasing in i, with c calibrated so the
    series-average deletion probability equals apm.
    """
    if spec.mechanism != "mar":
        raise ConfigError(f"apply_mar called with mechanism {spec.mechanism!r}")
    n_total = len(series)
    c = calibrate_mar(spec.apm, spec.mar_spread, n_total)
    u = (np.arange(1, n_total + 1) - 0.5) / n_total
    probs = ndtr((u - c) / spec.mar_spread)
    kill = rng.random(n_total) < probs
    return _delete(series, kill)


def apply_mnar(
    series: FlaggedSeries, n: int, spec: MissingnessSpec, rng: np.random.Generator
) -> FlaggedSeries:
    """Delete the largest values of round(pbm*k) randomly chosen blocks.

    The per-block deletion count is Binomial(n, pm) (or exactly
    round(pm*n) with deterministic counts); removing the top c order
    statistics guarantees a treated block with c >= 1 loses its true
    maximum.
    """
    if spec.mechanism != "mnar":
        raise ConfigError(f"apply_mnar called with mechanism {spec.mechanism!r}")
    k = _blocked_shape(series, n)
    kill = np.zeros(len(series), dtype=bool)
    for j in _pick_blocks(k, spec.pbm, rng):
        start = int(j) * n
        if spec.deterministic_counts:
            c = int(round(spec.pm * n))
        else:
            c = int(rng.binomial(n, spec.pm))
        if c == 0:
            continue
        block = series.values[start : start + n]
        order = np.argsort(block, kind="stable")
        kill[start + order[n - c :]] = True
    return _delete(series, kill)
