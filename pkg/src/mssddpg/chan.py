"""Chan-theory preprocessing: inclusion removal, top/bottom shapes and strokes.

The batch functions operate on whole series. :func:`analyze` returns the
array form used by the feature pipeline; the list-of-dataclass functions
(:func:`remove_inclusions`, :func:`detect_shapes`, :func:`extract_strokes`)
are thin views over it.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import EmptyError
from .market_data import BarSeries, format_timestamp

MIN_STROKE_BARS = 5

# column order of stroke feature records; shared with the raw layer of the observation
FEATURE_COLUMNS = ("open", "close", "high", "low", "volume", "trend")


class TrendDirection(enum.Enum):
    ASCENDING = "ascending"
    DESCENDING = "descending"


class ShapeKind(enum.IntEnum):
    TOP = 1
    BOTTOM = -1


class StrokeDirection(enum.IntEnum):
    RISING = 1
    DESCENDING = -1


@dataclass(frozen=True)
class MergedBar:
    low: float
    high: float
    start: int  # first source bar, inclusive
    end: int  # last source bar, inclusive
    timestamp: np.datetime64


@dataclass(frozen=True)
class Shape:
    kind: ShapeKind
    center: int
    pivot_price: float
    timestamp: np.datetime64


@dataclass(frozen=True)
class Stroke:
    start: Shape
    end: Shape
    direction: StrokeDirection
    span_open: float = float("nan")
    span_close: float = float("nan")
    span_high: float = float("nan")
    span_low: float = float("nan")
    span_volume: float = float("nan")


@dataclass(frozen=True)
class ChanAnalysis:
    """Array form of a full stroke extraction over one series."""

    series: BarSeries
    merged_high: np.ndarray
    merged_low: np.ndarray
    merged_start: np.ndarray
    merged_end: np.ndarray
    shape_center: np.ndarray
    shape_kind: np.ndarray
    shape_pivot: np.ndarray
    points: np.ndarray  # indices into the shape arrays, one per stroke endpoint
    count_after: np.ndarray  # endpoint count after each shape was linked

    @property
    def n_strokes(self) -> int:
        return max(len(self.points) - 1, 0)

    def merged(self) -> list[MergedBar]:
        ts = self.series.timestamp
        return [MergedBar(float(l), float(h), int(s), int(e), ts[e])
                for h, l, s, e in zip(self.merged_high, self.merged_low, self.merged_start, self.merged_end)]

    def shapes(self) -> list[Shape]:
        ts = self.series.timestamp
        return [Shape(ShapeKind(int(k)), int(c), float(p), ts[self.merged_end[c]])
                for c, k, p in zip(self.shape_center, self.shape_kind, self.shape_pivot)]

    def stroke_source_spans(self) -> tuple[np.ndarray, np.ndarray]:
        """Inclusive source-bar ranges from each stroke's start extreme bar to its end extreme bar."""
        c = self.shape_center[self.points]
        return self.merged_start[c[:-1]], self.merged_end[c[1:]]

    def stroke_records(self) -> np.ndarray:
        """``(n_strokes, 6)`` feature records in :data:`FEATURE_COLUMNS` order."""
        out = np.zeros((self.n_strokes, len(FEATURE_COLUMNS)))
        if self.n_strokes == 0:
            return out
        s = self.series
        lo, hi = self.stroke_source_spans()
        for j, (a, b) in enumerate(zip(lo, hi)):
            out[j, 0] = s.open[a]
            out[j, 1] = s.close[b]
            out[j, 2] = s.high[a:b + 1].max()
            out[j, 3] = s.low[a:b + 1].min()
            out[j, 4] = s.volume[a:b + 1].sum()
        # a stroke starting at a bottom rises
        out[:, 5] = np.where(self.shape_kind[self.points[:-1]] == ShapeKind.BOTTOM, 1.0, -1.0)
        return out

    def strokes(self) -> list[Stroke]:
        shapes = self.shapes()
        recs = self.stroke_records()
        out = []
        for j in range(self.n_strokes):
            a, b = shapes[self.points[j]], shapes[self.points[j + 1]]
            r = recs[j]
            out.append(Stroke(a, b, StrokeDirection(int(r[5])), float(r[0]), float(r[1]),
                              float(r[2]), float(r[3]), float(r[4])))
        return out

    def shape_confirm_index(self, known_at: np.ndarray, never: int) -> np.ndarray:
        """Index at which each shape's right neighbour is final.

        ``known_at[j]`` is the clock index at which bar ``j`` of this series is
        complete. A shape at merged centre ``c`` is settled once merged bar
        ``c + 2`` has begun, because merged bar ``c + 1`` can no longer absorb
        further bars.
        """
        nxt = self.shape_center + 2
        out = np.full(nxt.shape, never, dtype=np.int64)
        ok = nxt < len(self.merged_high)
        out[ok] = known_at[self.merged_start[nxt[ok]]]
        return out

    def stroke_confirm_index(self, known_at: np.ndarray, never: int) -> np.ndarray:
        """Index from which each stroke is final (its successor endpoint exists)."""
        shape_ready = self.shape_confirm_index(known_at, never)
        j = np.arange(self.n_strokes)
        k = np.searchsorted(self.count_after, j + 3, side="left")
        out = np.full(self.n_strokes, never, dtype=np.int64)
        ok = k < len(self.count_after)
        out[ok] = shape_ready[k[ok]]
        return out


def analyze(series: BarSeries, first_direction: TrendDirection = TrendDirection.ASCENDING,
            min_bars: int = MIN_STROKE_BARS) -> ChanAnalysis:
    if len(series) == 0:
        raise EmptyError("cannot extract strokes from an empty series")
    mh, ml, ms, me = kernels.merge_inclusions(series.high, series.low, first_direction is TrendDirection.ASCENDING)
    kinds = kernels.detect_shape_kinds(mh, ml)
    centers = np.flatnonzero(kinds).astype(np.int64)
    skind = kinds[centers].astype(np.int64)
    pivot = np.where(skind == ShapeKind.TOP, mh[centers], ml[centers])
    pts, count_after = kernels.link_strokes(centers, skind, pivot, min_bars)
    return ChanAnalysis(series, mh, ml, ms, me, centers, skind, pivot, pts, count_after)


def remove_inclusions(series: BarSeries,
                      first_direction: TrendDirection = TrendDirection.ASCENDING) -> list[MergedBar]:
    """Collapse adjacent bars whose ranges strictly contain one another.

    Each incoming bar is compared with the last merged bar. On inclusion the
    two are combined by taking max/max of lows and highs when the preceding
    merged pair was ascending (higher high, or equal high and higher low),
    min/min when descending, and the result is re-tested against its new left neighbour until no inclusion remains.
    """
    if len(series) == 0:
        raise EmptyError("cannot merge an empty series")
    mh, ml, ms, me = kernels.merge_inclusions(series.high, series.low, first_direction is TrendDirection.ASCENDING)
    ts = series.timestamp
    return [MergedBar(float(l), float(h), int(s), int(e), ts[e]) for h, l, s, e in zip(mh, ml, ms, me)]


def detect_shapes(merged: list[MergedBar]) -> list[Shape]:
    if len(merged) < 3:
        return []
    mh = np.array([m.high for m in merged])
    ml = np.array([m.low for m in merged])
    kinds = kernels.detect_shape_kinds(mh, ml)
    out = []
    for c in np.flatnonzero(kinds):
        kind = ShapeKind(int(kinds[c]))
        pivot = mh[c] if kind is ShapeKind.TOP else ml[c]
        out.append(Shape(kind, int(c), float(pivot), merged[c].timestamp))
    return out


def extract_strokes(shapes: list[Shape], merged: list[MergedBar], source: BarSeries | None = None,
                    min_bars: int = MIN_STROKE_BARS) -> list[Stroke]:
    """Link alternating shapes into strokes.

    A run of same-kind shapes keeps only its most extreme member. An
    alternating candidate becomes the next endpoint only if it spans at
    least ``min_bars`` merged bars (inclusive) from the previous endpoint and
    the top's high is above the bottom's low; otherwise it is skipped.
    When ``source`` is given the span OHLCV fields are filled in.
    """
    if len(shapes) < 2:
        return []
    centers = np.array([s.center for s in shapes], dtype=np.int64)
    kinds = np.array([int(s.kind) for s in shapes], dtype=np.int64)
    pivots = np.array([s.pivot_price for s in shapes], dtype=np.float64)
    pts, _ = kernels.link_strokes(centers, kinds, pivots, min_bars)
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        st = Stroke(shapes[a], shapes[b],
                    StrokeDirection.RISING if shapes[a].kind is ShapeKind.BOTTOM else StrokeDirection.DESCENDING)
        if source is not None:
            st = stroke_span_features(st, merged, source)[1]
        out.append(st)
    return out


def stroke_span_features(stroke: Stroke, merged: list[MergedBar], source: BarSeries) -> tuple[np.ndarray, Stroke]:
    """OHLCV aggregate over the stroke's source bars plus its trend judgment (+1/-1).

    Returns the record in :data:`FEATURE_COLUMNS` order and a copy of the
    stroke with the ``span_*`` fields filled.
    """
    a = merged[stroke.start.center].start
    b = merged[stroke.end.center].end
    rec = np.array([
        source.open[a],
        source.close[b],
        source.high[a:b + 1].max(),
        source.low[a:b + 1].min(),
        source.volume[a:b + 1].sum(),
        float(stroke.direction),
    ])
    filled = Stroke(stroke.start, stroke.end, stroke.direction, *map(float, rec[:5]))
    return rec, filled


class StrokeStream:
    """Append-only wrapper that re-extracts on every append.

    ``confirmed`` excludes the last stroke, whose end point may still move.
    """

    def __init__(self, series: BarSeries, first_direction: TrendDirection = TrendDirection.ASCENDING,
                 min_bars: int = MIN_STROKE_BARS) -> None:
        self.series = series
        self.first_direction = first_direction
        self.min_bars = min_bars
        self.analysis = analyze(series, first_direction, min_bars) if len(series) else None

    def append(self, bars: BarSeries) -> None:
        self.series = self.series.concat(bars)
        self.analysis = analyze(self.series, self.first_direction, self.min_bars)

    @property
    def strokes(self) -> list[Stroke]:
        return self.analysis.strokes() if self.analysis is not None else []

    @property
    def confirmed(self) -> list[Stroke]:
        return self.strokes[:-1]


def write_shapes_csv(analysis: ChanAnalysis, path: str | Path) -> None:
    date_only = _date_only(analysis.series)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "kind", "pivot_price", "timestamp"])
        for s in analysis.shapes():
            w.writerow([s.center, s.kind.name.lower(), repr(s.pivot_price), format_timestamp(s.timestamp, date_only)])


def write_strokes_csv(analysis: ChanAnalysis, path: str | Path) -> None:
    date_only = _date_only(analysis.series)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start_ts", "end_ts", "direction", "open", "close", "high", "low", "volume"])
        for st in analysis.strokes():
            w.writerow([format_timestamp(st.start.timestamp, date_only), format_timestamp(st.end.timestamp, date_only),
                        st.direction.name.lower(), repr(st.span_open), repr(st.span_close), repr(st.span_high),
                        repr(st.span_low), repr(st.span_volume)])


def _date_only(series: BarSeries) -> bool:
    ts = series.timestamp
    return bool(np.all(ts == ts.astype("datetime64[D]")))
