"""Multi-scale observation matrix: raw bars plus stroke records per timescale."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chan import FEATURE_COLUMNS, analyze
from .errors import ConfigError, ScaleError
from .market_data import DAY, MONTH, WEEK, BarSeries, TimeScale, bucket_starts, resample

N_COLS = len(FEATURE_COLUMNS)
TREND_COL = FEATURE_COLUMNS.index("trend")
STD_FLOOR = 1e-8


@dataclass(frozen=True)
class PipelineConfig:
    """``scales`` are the stroke scales; the raw layer always uses the series' own scale."""

    scales: tuple[TimeScale, ...] = (DAY, WEEK, MONTH)
    window_length: int = 30
    normalization: str = "zscore"

    def __post_init__(self) -> None:
        scales = tuple(TimeScale.parse(s) for s in self.scales)
        object.__setattr__(self, "scales", scales)
        if self.window_length < 1:
            raise ConfigError("window_length must be >= 1")
        if any(not a < b for a, b in zip(scales, scales[1:])):
            raise ConfigError("stroke scales must be strictly increasing in coarseness")
        if self.normalization not in ("none", "zscore"):
            raise ConfigError(f"unknown normalization {self.normalization!r}")

    @property
    def n_layers(self) -> int:
        return len(self.scales) + 1

    @property
    def obs_size(self) -> int:
        return self.n_layers * self.window_length * N_COLS


RAW_WINDOW_CONFIG = PipelineConfig(scales=(), window_length=30)


@dataclass(frozen=True)
class StrokeTable:
    """Stroke records at one scale, each tagged with the raw index from which it is visible."""

    scale: TimeScale
    records: np.ndarray
    visible_from: np.ndarray


@dataclass(frozen=True)
class FeatureMatrix:
    layers: np.ndarray  # (n_layers, window_length, 6)
    layer_meta: tuple[tuple[TimeScale, str], ...]
    n_real: np.ndarray  # real (non-pad) rows per layer, right-aligned

    @property
    def shape(self) -> tuple[int, ...]:
        return self.layers.shape

    def flatten(self) -> np.ndarray:
        return self.layers.reshape(-1)


def build_stroke_tables(raw: BarSeries, cfg: PipelineConfig) -> list[StrokeTable]:
    """Causal stroke tables for every configured stroke scale.

    A coarse bar is treated as complete only once the first raw bar of the
    next bucket has arrived, so nothing here depends on bars after the
    visibility index.
    """
    n = len(raw)
    never = np.iinfo(np.int64).max
    tables = []
    for scale in cfg.scales:
        if scale < raw.scale:
            raise ScaleError(f"stroke scale {scale} is finer than raw scale {raw.scale}")
        if scale == raw.scale:
            series = raw
            known_at = np.arange(n, dtype=np.int64)
        else:
            series = resample(raw, scale)
            starts = bucket_starts(raw, scale)
            known_at = np.append(starts[1:], never).astype(np.int64)
        if len(series) == 0:
            tables.append(StrokeTable(scale, np.zeros((0, N_COLS)), np.zeros(0, dtype=np.int64)))
            continue
        a = analyze(series)
        tables.append(StrokeTable(scale, a.stroke_records(), a.stroke_confirm_index(known_at, never)))
    return tables


def _raw_rows(raw: BarSeries, lo: int, hi: int) -> np.ndarray:
    rows = np.zeros((hi - lo, N_COLS))
    rows[:, 0] = raw.open[lo:hi]
    rows[:, 1] = raw.close[lo:hi]
    rows[:, 2] = raw.high[lo:hi]
    rows[:, 3] = raw.low[lo:hi]
    rows[:, 4] = raw.volume[lo:hi]
    return rows


def build_observation(raw: BarSeries, stroke_tables: list[StrokeTable], t: int,
                      cfg: PipelineConfig) -> FeatureMatrix:
    """Observation at raw index ``t``; short histories are left-padded with zero rows."""
    if not 0 <= t < len(raw):
        raise IndexError(f"t={t} outside series of length {len(raw)}")
    w = cfg.window_length
    layers = np.zeros((len(stroke_tables) + 1, w, N_COLS))
    n_real = np.zeros(len(stroke_tables) + 1, dtype=np.int64)
    lo = max(0, t - w + 1)
    layers[0, w - (t + 1 - lo):] = _raw_rows(raw, lo, t + 1)
    n_real[0] = t + 1 - lo
    meta = [(raw.scale, "raw")]
    for k, table in enumerate(stroke_tables, start=1):
        c = int(np.searchsorted(table.visible_from, t, side="right"))
        rows = table.records[max(0, c - w):c]
        if len(rows):
            layers[k, w - len(rows):] = rows
        n_real[k] = len(rows)
        meta.append((table.scale, "strokes"))
    return FeatureMatrix(layers, tuple(meta), n_real)


def window_stats(m: FeatureMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Per layer-column mean and population std over the real rows of ``m``."""
    n_layers, w, _ = m.layers.shape
    mean = np.zeros((n_layers, N_COLS))
    std = np.ones((n_layers, N_COLS))
    for k in range(n_layers):
        r = m.n_real[k]
        if r:
            rows = m.layers[k, w - r:]
            mean[k] = rows.mean(axis=0)
            std[k] = rows.std(axis=0)
    return mean, std


def normalize_observation(m: FeatureMatrix, stats: tuple[np.ndarray, np.ndarray] | None = None) -> FeatureMatrix:
    """Z-score real rows per layer and column; pad rows and the trend column pass through.

    Without ``stats`` the window's own rows supply them, which only uses data
    at or before the observation time.
    """
    mean, std = window_stats(m) if stats is None else stats
    std = np.maximum(std, STD_FLOOR)
    out = m.layers.copy()
    w = out.shape[1]
    for k in range(out.shape[0]):
        r = m.n_real[k]
        if r:
            z = (out[k, w - r:] - mean[k]) / std[k]
            z[:, TREND_COL] = out[k, w - r:, TREND_COL]
            out[k, w - r:] = z
    return FeatureMatrix(out, m.layer_meta, m.n_real)


@dataclass
class ObservationBuilder:
    """Precomputes observation vectors for every raw index of a series."""

    raw: BarSeries
    cfg: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self) -> None:
        self.tables = build_stroke_tables(self.raw, self.cfg)

    def at(self, t: int) -> FeatureMatrix:
        m = build_observation(self.raw, self.tables, t, self.cfg)
        return normalize_observation(m) if self.cfg.normalization == "zscore" else m

    def matrix(self) -> np.ndarray:
        out = np.empty((len(self.raw), self.cfg.obs_size))
        for t in range(len(self.raw)):
            out[t] = self.at(t).flatten()
        return out
