"""Hourly gauge ingestion, harmonic tide fitting, and detiding.

The tide is modelled as a slowly varying mean level plus a small set of
harmonic constituents, T(t) = M(t) + sum_n A_n cos(pi*(omega_n t - psi_n)/180),
with t in hours from the record start and angular speeds in degrees per
hour.  Fitting is ordinary least squares on observed points only; the
surge series is the residual at those points, with the missingness
pattern carried through untouched.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from gevmiss.blocking import FlaggedSeries
from gevmiss.errors import ConfigError, DataError, NumericalError

# standard angular speeds, degrees per hour
DEFAULT_CONSTITUENTS = (
    ("M2", 28.9841042),
    ("S2", 30.0),
    ("N2", 28.4397295),
    ("K1", 15.0410686),
    ("O1", 13.9430356),
)

MEAN_MODELS = ("constant", "linear", "yearly")


@dataclass(frozen=True)
class Constituent:
    """One harmonic term: named speed with fitted amplitude and phase."""

    name: str
    speed: float
    amplitude: float
    phase: float

    def __post_init__(self) -> None:
        if self.speed <= 0.0:
            raise ValueError(f"constituent speed must be positive, got {self.speed}")
        if self.amplitude < 0.0:
            raise ValueError("amplitude cannot be negative")
        if not 0.0 <= self.phase < 360.0:
            raise ValueError(f"phase must lie in [0, 360), got {self.phase}")


@dataclass(frozen=True)
class TideModel:
    """Fitted deterministic tide: mean level model plus constituents.

    ``mean_terms`` holds the mean-model coefficients: a single constant,
    (intercept, slope per hour) for the linear model, or one mean per
    calendar year in ``mean_years`` for the yearly model.  ``t0`` anchors
    the hour axis the phases refer to.
    """

    mean_model: str
    mean_terms: tuple[float, ...]
    mean_years: tuple[int, ...]
    constituents: tuple[Constituent, ...]
    t0: np.datetime64

    def predict(self, timestamps: np.ndarray) -> np.ndarray:
        """Tide height at each timestamp."""
        ts = np.asarray(timestamps, dtype="datetime64[s]")
        t = (ts - self.t0) / np.timedelta64(3600, "s")
        if self.mean_model == "constant":
            out = np.full(t.shape, self.mean_terms[0])
        elif self.mean_model == "linear":
            out = self.mean_terms[0] + self.mean_terms[1] * t
        else:
            years = ts.astype("datetime64[Y]").astype(int) + 1970
            lookup = dict(zip(self.mean_years, self.mean_terms))
            missing = set(years.tolist()) - set(self.mean_years)
            if missing:
                raise DataError(f"no fitted mean level for year(s) {sorted(missing)}")
            out = np.array([lookup[y] for y in years.tolist()])
        for con in self.constituents:
            out = out + con.amplitude * np.cos(
                np.pi * (con.speed * t - con.phase) / 180.0
            )
        return out


class SurgeSeries(FlaggedSeries):
    """Residual series after tide removal; NaN where the source is missing."""


def ingest_csv(
    path: str,
    timestamp_column: str = "timestamp",
    value_column: str = "level",
    timestamp_format: str | None = None,
    missing_sentinel: str = "",
) -> FlaggedSeries:
    """Read an hourly gauge CSV into a flagged series.

    Rows whose value field is empty, equals the sentinel, or fails to
    parse as a number are kept with a missing flag; bad timestamps and
    ordering violations are hard errors naming the offending line.
    """
    timestamps: list[datetime] = []
    values: list[float] = []
    observed: list[bool] = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file, expected a header row")
        for column in (timestamp_column, value_column):
            if column not in reader.fieldnames:
                raise DataError(f"{path}: header lacks column {column!r}")
        previous: datetime | None = None
        for row in reader:
            line = reader.line_num
            raw_ts = (row[timestamp_column] or "").strip()
            try:
                if timestamp_format is None:
                    stamp = datetime.fromisoformat(raw_ts)
                else:
                    stamp = datetime.strptime(raw_ts, timestamp_format)
            except ValueError as exc:
                raise DataError(f"{path} line {line}: bad timestamp {raw_ts!r}") from exc
            if previous is not None:
                if stamp == previous:
                    raise DataError(f"{path} line {line}: duplicate timestamp {raw_ts!r}")
                if stamp < previous:
                    raise DataError(
                        f"{path} line {line}: timestamp {raw_ts!r} out of order"
                    )
            previous = stamp
            raw_value = (row[value_column] or "").strip()
            if raw_value == missing_sentinel:
                value, seen = math.nan, False
            else:
                try:
                    value, seen = float(raw_value), True
                except ValueError:
                    value, seen = math.nan, False
            timestamps.append(stamp)
            values.append(value)
            observed.append(seen)
    return FlaggedSeries(
        np.array(values),
        np.array(observed, dtype=bool),
        np.array(timestamps, dtype="datetime64[s]"),
    )


def fit_tide(
    series: FlaggedSeries,
    constituents: tuple[tuple[str, float], ...] = DEFAULT_CONSTITUENTS,
    mean_model: str = "yearly",
) -> TideModel:
    """Least-squares harmonic fit on the observed points.

    The design pairs cos/sin columns at each constituent speed with the
    chosen mean-level basis; amplitudes and phases come from the cos/sin
    coefficients.  A rank-deficient design (near-duplicate speeds, too
    short a record) raises NumericalError.
    """
    if mean_model not in MEAN_MODELS:
        raise ConfigError(f"unknown mean model {mean_model!r}; expected one of {MEAN_MODELS}")
    if series.timestamps is None:
        raise ConfigError("tide fitting requires timestamps")
    for name, speed in constituents:
        if speed <= 0.0:
            raise ConfigError(f"constituent {name} has nonpositive speed {speed}")

    mask = series.observed
    ts = series.timestamps[mask]
    y = series.values[mask]
    t0 = series.timestamps[0]
    t = (ts - t0) / np.timedelta64(3600, "s")

    if mean_model == "constant":
        mean_cols = [np.ones(t.size)]
        mean_years: tuple[int, ...] = ()
    elif mean_model == "linear":
        mean_cols = [np.ones(t.size), t]
        mean_years = ()
    else:
        years = ts.astype("datetime64[Y]").astype(int) + 1970
        mean_years = tuple(sorted(set(years.tolist())))
        mean_cols = [(years == year).astype(float) for year in mean_years]

    needed = 2 * len(constituents) + len(mean_cols)
    if y.size < needed:
        raise DataError(
            f"tide fit needs at least {needed} observed points, got {y.size}"
        )

    harmonic_cols = []
    for _, speed in constituents:
        theta = np.pi * speed * t / 180.0
        harmonic_cols.append(np.cos(theta))
        harmonic_cols.append(np.sin(theta))
    design = np.column_stack(mean_cols + harmonic_cols)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise NumericalError(
            f"tide design is rank deficient ({rank} < {design.shape[1]}); "
            "check for duplicate speeds or too short a record"
        )

    n_mean = len(mean_cols)
    fitted = []
    for i, (name, speed) in enumerate(constituents):
        a = float(coef[n_mean + 2 * i])
        b = float(coef[n_mean + 2 * i + 1])
        amplitude = math.hypot(a, b)
        phase = math.degrees(math.atan2(b, a)) % 360.0
        fitted.append(Constituent(name=name, speed=speed, amplitude=amplitude, phase=phase))
    return TideModel(
        mean_model=mean_model,
        mean_terms=tuple(float(c) for c in coef[:n_mean]),
        mean_years=mean_years,
        constituents=tuple(fitted),
        t0=t0,
    )


def detide(series: FlaggedSeries, model: TideModel) -> SurgeSeries:
    """Subtract the fitted tide at observed points; flags pass through."""
    if series.timestamps is None:
        raise ConfigError("detiding requires timestamps")
    residuals = np.full(len(series), math.nan)
    mask = series.observed
    residuals[mask] = series.values[mask] - model.predict(series.timestamps[mask])
    return SurgeSeries(residuals, series.observed.copy(), series.timestamps.copy())


def write_surge_csv(path: str, source: FlaggedSeries, surge: SurgeSeries) -> None:
    """Emit timestamp, source level, residual, and observed flag per row."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["timestamp", "level", "residual", "observed"])
        for i in range(len(surge)):
            stamp = np.datetime_as_string(surge.timestamps[i], unit="s")
            level = "" if not source.observed[i] else repr(float(source.values[i]))
            residual = "" if not surge.observed[i] else repr(float(surge.values[i]))
            writer.writerow([stamp, level, residual, int(surge.observed[i])])
