"""Survival dataset representation, CSV ingestion, validation and standardization."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import (
    ConstantFeature,
    DimensionMismatch,
    EmptyInput,
    InputError,
    InvalidEventCode,
    MissingColumn,
    NoEvents,
    NonNumericCell,
    NonPositiveTime,
)

logger = logging.getLogger(__name__)


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Predictor matrix plus a right-censored outcome.

    Attributes:
        features: ``(n, p)`` predictor matrix.
        times: Observed times, strictly positive.
        events: Event indicators (1 = event, 0 = censored).
        feature_names: One name per predictor column.
    """

    features: np.ndarray
    times: np.ndarray
    events: np.ndarray
    feature_names: Tuple[str, ...]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        times = np.asarray(self.times, dtype=float).ravel()
        events = np.asarray(self.events).ravel()
        n = times.shape[0]
        if features.shape[0] != n or events.shape[0] != n:
            raise DimensionMismatch(f"features has {features.shape[0]} rows, times {n}, events {events.shape[0]}")
        if len(self.feature_names) != features.shape[1]:
            raise DimensionMismatch(f"{len(self.feature_names)} names for {features.shape[1]} feature columns")
        if n < 2:
            raise InputError("A survival dataset needs at least two observations")
        if not np.all(np.isfinite(features)):
            raise InputError("Feature matrix contains missing or non-finite values")
        bad = np.flatnonzero(~np.isfinite(times) | (times <= 0))
        if bad.size:
            raise NonPositiveTime(int(bad[0]), float(times[bad[0]]))
        bad = np.flatnonzero((events != 0) & (events != 1))
        if bad.size:
            raise InvalidEventCode(int(bad[0]), events[bad[0]])
        if not np.any(events == 1):
            raise NoEvents()
        object.__setattr__(self, "features", _frozen(features, float))
        object.__setattr__(self, "times", _frozen(times, float))
        object.__setattr__(self, "events", _frozen(events, np.int8))
        object.__setattr__(self, "feature_names", tuple(str(name) for name in self.feature_names))

    @property
    def n(self) -> int:
        return self.times.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def feature_ranges(self) -> np.ndarray:
        """Observed ``(min, max)`` per feature, shape ``(p, 2)``."""
        return np.column_stack([self.features.min(axis=0), self.features.max(axis=0)])

    def subset(self, rows: Sequence[int]) -> "SurvivalDataset":
        rows = np.asarray(rows)
        return SurvivalDataset(self.features[rows], self.times[rows], self.events[rows], self.feature_names)

    def select_features(self, names: Sequence[str]) -> "SurvivalDataset":
        index = {name: j for j, name in enumerate(self.feature_names)}
        missing = [name for name in names if name not in index]
        if missing:
            raise MissingColumn(missing[0])
        cols = [index[name] for name in names]
        return SurvivalDataset(self.features[:, cols], self.times, self.events, tuple(names))

    def with_features(self, features: np.ndarray) -> "SurvivalDataset":
        return SurvivalDataset(features, self.times, self.events, self.feature_names)


@dataclass(frozen=True, eq=False)
class StandardizationParams:
    """Per-feature location/scale used by ``standardize``.

    The scale uses the ``n - 1`` denominator (``ddof``).
    """

    means: np.ndarray
    sds: np.ndarray
    ddof: int = 1

    def __post_init__(self):
        if np.any(np.asarray(self.sds) <= 0):
            raise InputError("Standardization scales must be strictly positive")

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.means) / self.sds

    def invert(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=float) * self.sds + self.means

    def invert_thresholds(self, feature: int, thresholds: Sequence[float]) -> List[float]:
        return [float(t * self.sds[feature] + self.means[feature]) for t in thresholds]

    def to_dict(self) -> Dict[str, object]:
        return {"means": self.means.tolist(), "sds": self.sds.tolist(), "ddof": self.ddof}


@dataclass
class ValidationReport:
    """Descriptive checks on a dataset; never raises.

    Attributes:
        n: Number of observations.
        p: Number of features.
        n_events: Number of observed events.
        event_rate: ``n_events / n``.
        distinct_counts: Distinct-value count per feature name.
        tie_groups: Row-index groups (0-based) sharing an identical event time.
        feature_ranges: ``(min, max)`` per feature name.
    """

    n: int
    p: int
    n_events: int
    event_rate: float
    distinct_counts: Dict[str, int] = field(default_factory=dict)
    tie_groups: List[List[int]] = field(default_factory=list)
    feature_ranges: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "p": self.p,
            "n_events": self.n_events,
            "event_rate": self.event_rate,
            "distinct_counts": self.distinct_counts,
            "tie_groups": self.tie_groups,
            "feature_ranges": {k: list(v) for k, v in self.feature_ranges.items()},
        }


def _parse_numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    raw = frame[column].astype(str).str.strip()
    parsed = pd.to_numeric(raw, errors="coerce")
    bad = np.flatnonzero(parsed.isna().to_numpy() | ~np.isfinite(parsed.to_numpy(dtype=float, na_value=np.nan)))
    if bad.size:
        # rows are reported 1-based, counting data rows after the header
        row = int(bad[0])
        raise NonNumericCell(row + 1, column, raw.iloc[row])
    return parsed.to_numpy(dtype=float)


def load_csv(path: Path, time_col: str = "time", event_col: str = "event") -> SurvivalDataset:
    """Read a UTF-8 comma-separated file with a header row into a dataset.

    Every column other than ``time_col`` and ``event_col`` becomes a feature, in file order.
    Row numbers in errors are 1-based data rows.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise EmptyInput(path) from exc
    frame.columns = [str(c).strip() for c in frame.columns]
    for column in (time_col, event_col):
        if column not in frame.columns:
            raise MissingColumn(column)

    times = _parse_numeric(frame, time_col)
    bad = np.flatnonzero(times <= 0)
    if bad.size:
        raise NonPositiveTime(int(bad[0]) + 1, float(times[bad[0]]))

    raw_events = frame[event_col].astype(str).str.strip()
    events = pd.to_numeric(raw_events, errors="coerce").to_numpy(dtype=float, na_value=np.nan)
    bad = np.flatnonzero(~np.isin(events, (0.0, 1.0)))
    if bad.size:
        raise InvalidEventCode(int(bad[0]) + 1, raw_events.iloc[bad[0]])

    names = [c for c in frame.columns if c not in (time_col, event_col)]
    if names:
        features = np.column_stack([_parse_numeric(frame, name) for name in names])
    else:
        features = np.empty((len(frame), 0))
    logger.info("Loaded %s: n=%d, p=%d, events=%d", path, len(frame), len(names), int(events.sum()))
    return SurvivalDataset(features, times, events.astype(np.int8), tuple(names))


def write_csv(ds: SurvivalDataset, path: Path, time_col: str = "time", event_col: str = "event") -> None:
    """Write a dataset in the layout ``load_csv`` reads; floats keep full precision."""
    frame = pd.DataFrame(ds.features, columns=list(ds.feature_names))
    frame.insert(0, event_col, ds.events.astype(int))
    frame.insert(0, time_col, ds.times)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def standardize(ds: SurvivalDataset) -> Tuple[SurvivalDataset, StandardizationParams]:
    """Center each feature to mean 0 and scale to sample sd 1 (``n - 1`` denominator).

    Raises:
        ConstantFeature: A feature has zero sample standard deviation.
    """
    means = ds.features.mean(axis=0)
    sds = ds.features.std(axis=0, ddof=1)
    for j, sd in enumerate(sds):
        if not sd > 0:
            raise ConstantFeature(j, ds.feature_names[j])
    params = StandardizationParams(means=means, sds=sds, ddof=1)
    return ds.with_features(params.apply(ds.features)), params


def validate(ds: SurvivalDataset) -> ValidationReport:
    """Summarise distinct values, events and event-time ties."""
    n_events = int(ds.events.sum())
    distinct = {name: int(np.unique(ds.features[:, j]).size) for j, name in enumerate(ds.feature_names)}
    ranges = {name: (float(lo), float(hi)) for name, (lo, hi) in zip(ds.feature_names, ds.feature_ranges())}

    event_rows = np.flatnonzero(ds.events == 1)
    groups: Dict[float, List[int]] = {}
    for row in event_rows:
        groups.setdefault(float(ds.times[row]), []).append(int(row))
    ties = [rows for _, rows in sorted(groups.items()) if len(rows) > 1]

    return ValidationReport(
        n=ds.n,
        p=ds.p,
        n_events=n_events,
        event_rate=n_events / ds.n,
        distinct_counts=distinct,
        tie_groups=ties,
        feature_ranges=ranges,
    )
