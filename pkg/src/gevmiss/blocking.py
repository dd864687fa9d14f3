"""Partition flagged series into blocks and summarise each block.

A flagged series carries a value and an observed/missing flag per entry.
Fixed-size partitioning assumes an exact split; calendar partitioning
assigns hourly entries to calendar years and treats hours absent from the
record as missing.
"""

from __future__ import annotations

import calendar
import logging
from dataclasses import dataclass, field

import numpy as np

from gevmiss.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

HOURS_PER_YEAR = 8760
HOURS_PER_LEAP_YEAR = 8784


@dataclass
class FlaggedSeries:
    """Ordered observations with per-entry observed flags.

    ``values`` and ``observed`` are parallel arrays of length N; entries
    with a false flag are treated as missing wherever the series is
    consumed.  ``timestamps`` (datetime64) is required only for calendar
    blocking and CSV-based workflows.
    """

    values: np.ndarray
    observed: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.observed = np.asarray(self.observed, dtype=bool)
        if self.values.shape != self.observed.shape or self.values.ndim != 1:
            raise ValueError("values and observed must be 1-d arrays of equal length")
        if self.timestamps is not None:
            self.timestamps = np.asarray(self.timestamps, dtype="datetime64[s]")
            if self.timestamps.shape != self.values.shape:
                raise ValueError("timestamps must match values in length")

    def __len__(self) -> int:
        return self.values.size

    @property
    def n_observed(self) -> int:
        return int(np.count_nonzero(self.observed))

    def observed_values(self) -> np.ndarray:
        """The values at observed entries, in series order."""
        return self.values[self.observed]


@dataclass(frozen=True)
class BlockSummary:
    """Per-block bookkeeping: observed/missing counts and the observed maximum.

    ``observed_max`` is None exactly when the block has no observed entry.
    For calendar blocks ``index`` is the calendar year.
    """

    index: int
    n_obs: int
    n_miss: int
    observed_max: float | None = field(default=None)

    def __post_init__(self) -> None:
        if self.n_obs < 0 or self.n_miss < 0:
            raise ValueError("block counts must be nonnegative")
        if (self.observed_max is None) != (self.n_obs == 0):
            raise ValueError("observed_max must be present exactly when n_obs > 0")

    @property
    def size(self) -> int:
        return self.n_obs + self.n_miss

    @property
    def missing_fraction(self) -> float:
        return self.n_miss / self.size


def partition_fixed(series: FlaggedSeries, n: int) -> list[BlockSummary]:
    """Split a series into consecutive blocks of exactly ``n`` entries.

    The series length must be an exact multiple of ``n``; anything else is
    a configuration error rather than a silently truncated analysis.
    """
    if n < 1:
        raise ConfigError(f"block size must be at least 1, got {n}")
    total = len(series)
    if total % n != 0:
        raise ConfigError(f"series length {total} is not divisible by block size {n}")
    k = total // n
    values = series.values.reshape(k, n)
    observed = series.observed.reshape(k, n)
    summaries = []
    for j in range(k):
        n_obs = int(np.count_nonzero(observed[j]))
        obs_max = float(values[j][observed[j]].max()) if n_obs else None
        summaries.append(BlockSummary(index=j, n_obs=n_obs, n_miss=n - n_obs, observed_max=obs_max))
    return summaries


def partition_calendar(series: FlaggedSeries) -> list[BlockSummary]:
    """One block per calendar year spanned by the series' timestamps.

    The expected entry count for a year is its full hour count (8760, or
    8784 in leap years), so hours absent from the record count as missing
    alongside entries explicitly flagged missing.
    """
    if series.timestamps is None:
        raise ConfigError("calendar blocking requires timestamps")
    ts = series.timestamps
    if ts.size == 0:
        return []
    deltas = np.diff(ts.astype("int64"))
    if np.any(deltas == 0):
        raise DataError("duplicate timestamps in series")
    if np.any(deltas < 0):
        raise DataError("timestamps must be strictly increasing")

    years = ts.astype("datetime64[Y]").astype(int) + 1970
    first, last = int(years[0]), int(years[-1])
    summaries = []
    for year in range(first, last + 1):
        expected = HOURS_PER_LEAP_YEAR if calendar.isleap(year) else HOURS_PER_YEAR
        in_year = years == year
        n_entries = int(np.count_nonzero(in_year))
        if n_entries > expected:
            raise DataError(f"year {year} has {n_entries} entries but at most {expected} hours")
        obs_mask = in_year & series.observed
        n_obs = int(np.count_nonzero(obs_mask))
        obs_max = float(series.values[obs_mask].max()) if n_obs else None
        summaries.append(BlockSummary(index=year, n_obs=n_obs, n_miss=expected - n_obs, observed_max=obs_max))
    return summaries


def filter_summaries(summaries: list[BlockSummary], rule: str) -> list[BlockSummary]:
    """Keep blocks according to a completeness rule.

    ``all`` keeps every block, ``complete`` keeps blocks with no missing
    entries, and ``complete10`` keeps blocks missing under 10% of their
    entries.
    """
    if rule == "all":
        return list(summaries)
    if rule == "complete":
        return [s for s in summaries if s.n_miss == 0]
    if rule == "complete10":
        return [s for s in summaries if s.missing_fraction < 0.10]
    raise ConfigError(f"unknown block filter {rule!r}; expected all, complete, or complete10")


def nonempty(summaries: list[BlockSummary]) -> list[BlockSummary]:
    """Drop blocks with no observed entry (no maximum exists to fit on)."""
    kept = [s for s in summaries if s.n_obs > 0]
    dropped = len(summaries) - len(kept)
    if dropped:
        logger.info("excluded %d block(s) with no observed entries", dropped)
    return kept
