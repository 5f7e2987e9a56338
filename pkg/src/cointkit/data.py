"""Series and panel containers, level transforms and CSV ingestion.

Every transform returns a new object; the input is never modified.  Each
output records the chain of transforms applied so far in ``provenance``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateSeriesError,
    DomainError,
    InsufficientDataError,
    MissingBaseError,
    ParseError,
)

__all__ = [
    "ObservationSeries",
    "MarketPanel",
    "AlignmentRoles",
    "AlignedPanel",
    "DescriptiveStats",
    "rebase_to_relative",
    "log_transform",
    "difference",
    "lag",
    "apply_closing_time_alignment",
    "descriptive_stats",
    "build_panel",
    "read_panel_csv",
    "write_panel_csv",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _as_dates(dates) -> np.ndarray:
    arr = np.asarray(dates)
    if arr.dtype.kind in "US":
        try:
            arr = arr.astype("datetime64[D]")
        except ValueError as exc:
            raise ParseError(f"unparseable date label: {exc}") from None
    return arr


@dataclass(frozen=True, eq=False)
class ObservationSeries:
    """One market's levels on an ordered calendar."""

    name: str
    dates: np.ndarray
    values: np.ndarray
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        dates = _as_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        if dates.ndim != 1 or values.ndim != 1:
            raise DomainError("dates and values must be one-dimensional")
        if dates.shape[0] != values.shape[0]:
            raise DomainError(
                f"{self.name}: {dates.shape[0]} dates but {values.shape[0]} values"
            )
        if dates.shape[0] > 1 and not np.all(dates[1:] > dates[:-1]):
            raise DomainError(f"{self.name}: dates must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DomainError(f"{self.name}: values must be finite")
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __len__(self):
        return self.values.shape[0]

    def derive(self, dates, values, step: str) -> "ObservationSeries":
        return ObservationSeries(self.name, dates, values, self.provenance + (step,))


@dataclass(frozen=True, eq=False)
class MarketPanel:
    """Aligned multivariate levels; column ``j`` belongs to ``names[j]``."""

    names: tuple[str, ...]
    calendar: np.ndarray
    values: np.ndarray
    provenance: tuple[str, ...] = ()
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        names = tuple(self.names)
        calendar = _as_dates(self.calendar)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if len(names) < 1:
            raise DomainError("panel needs at least one series")
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate market names in {names}")
        if values.shape != (calendar.shape[0], len(names)):
            raise DomainError(
                f"values shape {values.shape} does not match "
                f"{calendar.shape[0]} dates x {len(names)} markets"
            )
        if calendar.shape[0] < 1:
            raise DomainError("panel series must be nonempty")
        if calendar.shape[0] > 1 and not np.all(calendar[1:] > calendar[:-1]):
            raise DomainError("calendar must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DomainError("panel values must be finite")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "calendar", _frozen(calendar))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def nobs(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigurationError(f"unknown market {name!r}") from None

    def series(self, name: str) -> ObservationSeries:
        return ObservationSeries(
            name, self.calendar, self.values[:, self.index(name)], self.provenance
        )

    def select(self, names: Sequence[str]) -> "MarketPanel":
        cols = [self.index(n) for n in names]
        return MarketPanel(tuple(names), self.calendar, self.values[:, cols], self.provenance)

    def map_series(self, fn) -> "MarketPanel":
        """Apply a series transform to every column and rebuild the panel."""
        return build_panel([fn(self.series(n)) for n in self.names])

    @classmethod
    def from_series(cls, series: Sequence[ObservationSeries]) -> "MarketPanel":
        return build_panel(series)


def build_panel(series: Iterable[ObservationSeries]) -> MarketPanel:
    """Inner-join series on their dates (no interpolation)."""
    series = list(series)
    if not series:
        raise DomainError("panel needs at least one series")
    common = series[0].dates
    for s in series[1:]:
        common = np.intersect1d(common, s.dates)
    if common.shape[0] == 0:
        raise InsufficientDataError("series share no common dates")
    cols = []
    for s in series:
        pos = np.searchsorted(s.dates, common)
        cols.append(s.values[pos])
    prov = series[0].provenance if all(s.provenance == series[0].provenance for s in series) else ()
    return MarketPanel(tuple(s.name for s in series), common, np.column_stack(cols), prov)


# --------------------------------------------------------------------------
# transforms

def rebase_to_relative(series: ObservationSeries, base_date) -> ObservationSeries:
    """Rescale so the value at ``base_date`` is exactly 100."""
    if np.any(series.values <= 0):
        raise DomainError(f"{series.name}: nonpositive price cannot be rebased")
    key = _as_dates(np.asarray([base_date]))[0]
    pos = np.flatnonzero(series.dates == key)
    if pos.size == 0:
        raise MissingBaseError(f"{series.name}: base date {base_date} not in calendar")
    i = int(pos[0])
    base = series.values[i]
    out = 100.0 * series.values / base
    out[i] = 100.0
    return series.derive(series.dates, out, f"rebase({key})")


def log_transform(series: ObservationSeries) -> ObservationSeries:
    if np.any(series.values <= 0):
        raise DomainError(f"{series.name}: log of nonpositive value")
    return series.derive(series.dates, np.log(series.values), "log")


def difference(series: ObservationSeries, order: int = 1) -> ObservationSeries:
    if order < 1:
        raise DomainError("difference order must be positive")
    if len(series) <= order:
        raise InsufficientDataError(
            f"{series.name}: {len(series)} observations cannot be differenced {order} time(s)"
        )
    return series.derive(
        series.dates[order:], np.diff(series.values, n=order), f"diff({order})"
    )


def lag(series: ObservationSeries, k: int) -> ObservationSeries:
    """Shift values back ``k`` steps; the first ``k`` dates are dropped."""
    if k < 0:
        raise DomainError("lag must be nonnegative")
    if k >= len(series):
        raise InsufficientDataError(f"{series.name}: lag {k} needs more than {len(series)} points")
    if k == 0:
        return series.derive(series.dates, series.values, "lag(0)")
    return series.derive(series.dates[k:], series.values[:-k], f"lag({k})")


# --------------------------------------------------------------------------
# closing-time alignment

@dataclass(frozen=True)
class AlignmentRoles:
    first_to_close: frozenset[str] = frozenset()
    last_to_close: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "first_to_close", frozenset(self.first_to_close))
        object.__setattr__(self, "last_to_close", frozenset(self.last_to_close))
        overlap = self.first_to_close & self.last_to_close
        if overlap:
            raise ConfigurationError(f"markets in both closing roles: {sorted(overlap)}")

    def offsets_for(self, dependent: str, names: Sequence[str]) -> dict[str, int]:
        """Lag applied to each market's column when ``dependent`` is regressed."""
        out = {}
        for n in names:
            if n == dependent:
                out[n] = 0
            elif dependent in self.first_to_close:
                out[n] = 1
            elif dependent in self.last_to_close:
                # markets sharing the last closing slot are contemporaneous
                out[n] = 0
            else:
                out[n] = 1 if n in self.last_to_close else 0
        return out


@dataclass(frozen=True, eq=False)
class AlignedPanel:
    """Per-dependent regressor views on one common trimmed calendar."""

    views: Mapping[str, MarketPanel]
    offsets: Mapping[str, Mapping[str, int]]

    def view(self, dependent: str) -> MarketPanel:
        try:
            return self.views[dependent]
        except KeyError:
            raise ConfigurationError(f"unknown market {dependent!r}") from None


def apply_closing_time_alignment(panel: MarketPanel, roles: AlignmentRoles) -> AlignedPanel:
    unknown = (roles.first_to_close | roles.last_to_close) - set(panel.names)
    if unknown:
        raise ConfigurationError(f"alignment roles name unknown markets: {sorted(unknown)}")
    if panel.nobs < 2:
        raise InsufficientDataError("closing-time alignment needs at least 2 observations")
    offsets = {d: roles.offsets_for(d, panel.names) for d in panel.names}
    shift = max(max(o.values()) for o in offsets.values())
    T = panel.nobs
    views = {}
    for dep, off in offsets.items():
        cols = [panel.values[shift - off[n]: T - off[n], j] for j, n in enumerate(panel.names)]
        views[dep] = MarketPanel(
            panel.names,
            panel.calendar[shift:],
            np.column_stack(cols),
            panel.provenance + (f"align({dep})",),
            {"dependent": dep, "lag_offsets": dict(off)},
        )
    return AlignedPanel(views, offsets)


# --------------------------------------------------------------------------
# descriptive statistics

@dataclass(frozen=True)
class DescriptiveStats:
    nobs: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    jarque_bera: float


def descriptive_stats(series: ObservationSeries) -> DescriptiveStats:
    """Central-moment summary; variance is the 1/T second moment."""
    x = series.values
    T = x.shape[0]
    if T < 4:
        raise InsufficientDataError("descriptive statistics need at least 4 points")
    d = x - x.mean()
    m2 = np.mean(d**2)
    if m2 <= 0.0 or m2 <= 1e-14 * max(1.0, float(np.mean(x**2))):
        raise DegenerateSeriesError(f"{series.name}: zero variance")
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    skew = m3 / m2**1.5
    kurt = m4 / m2**2
    jb = T / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    return DescriptiveStats(T, float(x.mean()), float(m2), float(skew), float(kurt - 3.0), float(jb))


# --------------------------------------------------------------------------
# CSV

def read_panel_csv(path) -> MarketPanel:
    """Read ``date,<market>...`` CSV; rows with empty cells are dropped."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        if not header or header[0].lower() != "date":
            raise ParseError(f"{path}: first header column must be 'date'")
        names = header[1:]
        if not names:
            raise ParseError(f"{path}: no market columns")
        if len(set(names)) != len(names) or any(not n for n in names):
            raise ParseError(f"{path}: market column names must be unique and nonempty")
        dates, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                d = np.datetime64(row[0].strip(), "D")
            except ValueError:
                raise ParseError(f"{path}:{lineno}: column 'date': bad ISO date {row[0]!r}") from None
            vals = []
            for name, cell in zip(names, row[1:]):
                cell = cell.strip()
                if cell == "":
                    vals.append(math.nan)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}:{lineno}: column {name!r}: non-numeric cell {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise ParseError(f"{path}:{lineno}: column {name!r}: non-finite value {cell!r}")
                vals.append(v)
            dates.append(d)
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    dates = np.array(dates, dtype="datetime64[D]")
    if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
        bad = int(np.flatnonzero(dates[1:] <= dates[:-1])[0]) + 3
        raise ParseError(f"{path}:{bad}: dates must be strictly ascending")
    values = np.array(rows, dtype=float)
    keep = np.all(np.isfinite(values), axis=1)
    if not np.any(keep):
        raise ParseError(f"{path}: no date has values for every market")
    return MarketPanel(tuple(names), dates[keep], values[keep], (f"csv({path.name})",))


def write_panel_csv(panel: MarketPanel, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *panel.names])
        for d, row in zip(panel.calendar, panel.values):
            w.writerow([str(d), *(repr(float(v)) for v in row)])
