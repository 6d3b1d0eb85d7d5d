"""OHLCV bar series: loading, validation, resampling and synthetic fixtures."""

from __future__ import annotations

import csv
import functools
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping

import numpy as np
import pandas as pd

from .errors import DataError, EmptyError, FormatError, OrderError, ScaleError, SpecError

CSV_COLUMNS = ("timestamp", "open", "high", "low", "close", "volume")

_NOMINAL_MINUTES = {"day": 1440, "week": 7 * 1440, "month": 30 * 1440}
_KIND_RANK = {"minutes": 0, "day": 1, "week": 2, "month": 3}


@functools.total_ordering
@dataclass(frozen=True)
class TimeScale:
    """Bar interval. ``kind`` is ``minutes`` (with ``minutes`` set), ``day``, ``week`` or ``month``."""

    kind: str
    minutes: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _KIND_RANK:
            raise ScaleError(f"unknown timescale kind {self.kind!r}")
        if self.kind == "minutes" and self.minutes <= 0:
            raise ScaleError("minute scales need a positive minute count")
        if self.kind != "minutes" and self.minutes:
            object.__setattr__(self, "minutes", 0)

    @property
    def nominal_minutes(self) -> int:
        return self.minutes if self.kind == "minutes" else _NOMINAL_MINUTES[self.kind]

    def _key(self) -> tuple[int, int]:
        return (self.nominal_minutes, _KIND_RANK[self.kind])

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, TimeScale):
            return NotImplemented
        return self._key() < other._key()

    def __str__(self) -> str:
        return f"{self.minutes}min" if self.kind == "minutes" else self.kind

    @classmethod
    def parse(cls, text: str | TimeScale) -> TimeScale:
        if isinstance(text, TimeScale):
            return text
        t = text.strip().lower()
        if t in ("day", "d", "1d", "daily"):
            return cls("day")
        if t in ("week", "w", "1w", "weekly"):
            return cls("week")
        if t in ("month", "m", "1mo", "monthly"):
            return cls("month")
        m = re.fullmatch(r"(?:min(\d+)|(\d+)\s*(?:min|m|minutes?))", t)
        if m:
            return cls("minutes", int(m.group(1) or m.group(2)))
        raise ScaleError(f"cannot parse timescale {text!r}")

    def bucket_keys(self, timestamps: np.ndarray) -> np.ndarray:
        """Integer bucket id per timestamp; equal ids share a bucket."""
        ts = np.asarray(timestamps, dtype="datetime64[ns]")
        if self.kind == "minutes":
            step = np.int64(self.minutes) * np.int64(60_000_000_000)
            ns = ts.astype(np.int64)
            # close-time stamps: (t - step, t] belongs to bucket ceil(t / step)
            return -((-ns) // step)
        days = ts.astype("datetime64[D]").astype(np.int64)
        if self.kind == "day":
            return days
        if self.kind == "week":
            # 1970-01-01 was a Thursday; shift so weeks run Monday..Sunday
            return (days + 3) // 7
        return ts.astype("datetime64[M]").astype(np.int64)


MIN10 = TimeScale("minutes", 10)
DAY = TimeScale("day")
WEEK = TimeScale("week")
MONTH = TimeScale("month")


@dataclass(frozen=True)
class Bar:
    timestamp: np.datetime64
    open: float
    high: float
    low: float
    close: float
    volume: float


def _readonly(a: Any, dtype: Any) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BarSeries:
    """Immutable column store of bars at a single timescale.

    Construction validates every bar invariant; violations raise
    :class:`DataError` carrying the 1-based row, non-increasing timestamps
    raise :class:`OrderError`.
    """

    scale: TimeScale
    timestamp: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray
    _validated: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamp", _readonly(self.timestamp, "datetime64[ns]"))
        for name in ("open", "high", "low", "close", "volume"):
            object.__setattr__(self, name, _readonly(getattr(self, name), np.float64))
        n = self.timestamp.shape[0]
        if any(getattr(self, c).shape != (n,) for c in ("open", "high", "low", "close", "volume")):
            raise DataError("column lengths differ")
        if not self._validated:
            validate_arrays(self.timestamp, self.open, self.high, self.low, self.close, self.volume)

    @classmethod
    def from_bars(cls, scale: TimeScale, bars: list[Bar]) -> BarSeries:
        cols = list(zip(*[(b.timestamp, b.open, b.high, b.low, b.close, b.volume) for b in bars])) or [[]] * 6
        return cls(scale, *cols)

    def __len__(self) -> int:
        return int(self.timestamp.shape[0])

    def __getitem__(self, i: int) -> Bar:
        return Bar(self.timestamp[i], float(self.open[i]), float(self.high[i]), float(self.low[i]),
                   float(self.close[i]), float(self.volume[i]))

    def __iter__(self) -> Iterator[Bar]:
        return (self[i] for i in range(len(self)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BarSeries):
            return NotImplemented
        return self.scale == other.scale and all(
            np.array_equal(getattr(self, c), getattr(other, c)) for c in ("timestamp",) + CSV_COLUMNS[1:]
        )

    def slice(self, start: int, stop: int) -> BarSeries:
        return BarSeries(self.scale, self.timestamp[start:stop], self.open[start:stop], self.high[start:stop],
                         self.low[start:stop], self.close[start:stop], self.volume[start:stop], _validated=True)

    def concat(self, other: BarSeries) -> BarSeries:
        if other.scale != self.scale:
            raise ScaleError("cannot concatenate series at different scales")
        return BarSeries(self.scale, *(np.concatenate([getattr(self, c), getattr(other, c)])
                                       for c in ("timestamp",) + CSV_COLUMNS[1:]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({c: getattr(self, c) for c in CSV_COLUMNS})


def validate_arrays(ts, o, h, l, c, v) -> None:
    bad = ~(np.isfinite(o) & np.isfinite(h) & np.isfinite(l) & np.isfinite(c) & np.isfinite(v))
    _raise_first(bad, "non-finite value")
    _raise_first(l > h, "low above high")
    _raise_first(l > np.minimum(o, c), "low above open/close")
    _raise_first(h < np.maximum(o, c), "high below open/close")
    _raise_first(v < 0, "negative volume")
    if ts.shape[0] > 1:
        nondec = np.flatnonzero(np.diff(ts.astype(np.int64)) <= 0)
        if nondec.size:
            raise OrderError(f"timestamps not strictly increasing at row {int(nondec[0]) + 2}")


def _raise_first(mask: np.ndarray, what: str) -> None:
    idx = np.flatnonzero(mask)
    if idx.size:
        raise DataError(what, row=int(idx[0]) + 1)


def load_csv(path: str | Path, scale: TimeScale | str) -> BarSeries:
    """Read ``timestamp,open,high,low,close,volume`` bars from a UTF-8 CSV file.

    Timestamps may be RFC 3339 (offsets are converted to UTC) or
    ``YYYY-MM-DD[ HH:MM]`` (taken as UTC). Bars must already be in strictly
    increasing time order.
    """
    scale = TimeScale.parse(scale)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if tuple(header) != CSV_COLUMNS:
            raise FormatError(f"{path}: header {header} != {list(CSV_COLUMNS)}")
        rows = []
        for i, row in enumerate(reader, start=1):
            if not row or all(not x.strip() for x in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                raise FormatError(f"{path}: row {i} has {len(row)} fields")
            rows.append(row)
    if not rows:
        return BarSeries(scale, [], [], [], [], [], [])
    cols = list(zip(*rows))
    ts = _parse_timestamps(cols[0])
    values = []
    for name, col in zip(CSV_COLUMNS[1:], cols[1:]):
        values.append(_parse_floats(col, name))
    return BarSeries(scale, ts, *values)


def _parse_floats(col, name: str) -> np.ndarray:
    # float() round-trips repr output exactly, unlike pandas' fast parser
    out = np.empty(len(col))
    for i, x in enumerate(col):
        try:
            out[i] = float(x)
        except ValueError:
            raise DataError(f"unparseable {name} {x!r}", row=i + 1) from None
    _raise_first(np.isnan(out), f"NaN {name}")
    return out


def _parse_timestamps(raw) -> np.ndarray:
    s = pd.Series(raw, dtype=object).str.strip()
    parsed = pd.to_datetime(s, utc=True, format="ISO8601", errors="coerce")
    _raise_first(parsed.isna().to_numpy(), "unparseable timestamp")
    return parsed.dt.tz_localize(None).to_numpy("datetime64[ns]")


def format_timestamp(ts: np.datetime64, date_only: bool) -> str:
    t = pd.Timestamp(ts)
    return t.strftime("%Y-%m-%d") if date_only else t.strftime("%Y-%m-%dT%H:%M:%SZ")


def save_csv(series: BarSeries, path: str | Path) -> None:
    ts = series.timestamp
    date_only = bool(len(series) == 0 or np.all(ts == ts.astype("datetime64[D]")))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i in range(len(series)):
            w.writerow([format_timestamp(ts[i], date_only)] + [repr(float(getattr(series, c)[i]))
                                                               for c in CSV_COLUMNS[1:]])


def bucket_starts(series: BarSeries, target: TimeScale) -> np.ndarray:
    """First source-bar index of every target bucket."""
    keys = target.bucket_keys(series.timestamp)
    if keys.size == 0:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([[0], np.flatnonzero(np.diff(keys) != 0) + 1]).astype(np.int64)


def resample(series: BarSeries, target: TimeScale | str) -> BarSeries:
    """Aggregate bars into coarser buckets.

    Empty buckets are omitted. The resampled bar is stamped with the close time
    of the last source bar in its bucket.
    """
    target = TimeScale.parse(target)
    if not series.scale < target:
        raise ScaleError(f"{target} is not coarser than {series.scale}")
    if len(series) == 0:
        return BarSeries(target, [], [], [], [], [], [])
    starts = bucket_starts(series, target)
    ends = np.append(starts[1:], len(series)) - 1
    return BarSeries(
        target,
        series.timestamp[ends],
        series.open[starts],
        np.maximum.reduceat(series.high, starts),
        np.minimum.reduceat(series.low, starts),
        series.close[ends],
        np.add.reduceat(series.volume, starts),
        _validated=True,
    )


@dataclass(frozen=True)
class SynthSpec:
    kind: str
    length: int
    seed: int = 0
    params: Mapping[str, Any] = field(default_factory=dict)


_SUBSTEPS = 8


def synth_series(spec: SynthSpec | Mapping[str, Any]) -> BarSeries:
    """Deterministic synthetic bars.

    Kinds and their ``params`` (defaults in brackets):

    * ``sine``: ``offset`` [100], ``amplitude`` [10], ``period`` [50], ``phase`` [0], ``noise`` [0]
    * ``trend``: ``start_price`` [100], ``slope`` [0.1]
    * ``random-walk``: ``start_price`` [100], ``drift`` [0], ``vol`` [0.01]

    All kinds accept ``start`` [2000-01-03] and ``scale`` [day]. Daily bars
    fall on business days. Close at bar ``t`` is the generating path at
    ``t``; open is the path at ``t - 1`` and high/low are the extremes of the
    path sampled between the two.
    """
    if isinstance(spec, Mapping):
        spec = SynthSpec(spec["kind"], int(spec["length"]), int(spec.get("seed", 0)), dict(spec.get("params", {})))
    if spec.length < 1:
        raise SpecError("length must be at least 1")
    p = dict(spec.params)
    rng = np.random.default_rng(spec.seed)
    n = spec.length
    grid = np.arange(-_SUBSTEPS, n * _SUBSTEPS + 1) / _SUBSTEPS  # path time, one bar = _SUBSTEPS steps
    if spec.kind == "sine":
        offset = float(p.get("offset", 100.0))
        amp = float(p.get("amplitude", 10.0))
        period = float(p.get("period", 50.0))
        phase = float(p.get("phase", 0.0))
        path = offset + amp * np.sin(2.0 * math.pi * (grid + phase) / period)
        noise = float(p.get("noise", 0.0))
        if noise > 0:
            path = path * np.exp(noise * rng.standard_normal(path.shape))
    elif spec.kind == "trend":
        path = float(p.get("start_price", 100.0)) + float(p.get("slope", 0.1)) * grid
    elif spec.kind in ("random-walk", "random_walk", "randomwalk"):
        vol = float(p.get("vol", 0.01)) / math.sqrt(_SUBSTEPS)
        drift = float(p.get("drift", 0.0)) / _SUBSTEPS
        steps = drift + vol * rng.standard_normal(grid.shape[0] - 1)
        path = float(p.get("start_price", 100.0)) * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))
    else:
        raise SpecError(f"unknown synthetic kind {spec.kind!r}")
    if np.any(path <= 0):
        raise SpecError("generated non-positive prices; adjust params")
    windows = np.lib.stride_tricks.sliding_window_view(path, _SUBSTEPS + 1)[::_SUBSTEPS][:n]
    opens = windows[:, 0]
    closes = windows[:, -1]
    highs = windows.max(axis=1)
    lows = windows.min(axis=1)
    volume = np.round(1000.0 + 500.0 * rng.random(n))

    scale = TimeScale.parse(p.get("scale", "day"))
    start = pd.Timestamp(p.get("start", "2000-01-03"))
    if scale == DAY:
        stamps = pd.bdate_range(start, periods=n)
    elif scale.kind == "minutes":
        stamps = pd.date_range(start, periods=n, freq=f"{scale.minutes}min") + pd.Timedelta(minutes=scale.minutes)
    elif scale == WEEK:
        stamps = pd.date_range(start, periods=n, freq="W-FRI")
    else:
        stamps = pd.date_range(start, periods=n, freq="ME")
    return BarSeries(scale, stamps.to_numpy("datetime64[ns]"), opens, highs, lows, closes, volume)


def require_nonempty(series: BarSeries) -> None:
    if len(series) == 0:
        raise EmptyError("series has no bars")
