"""Backtest performance metrics and report assembly."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DataError
from .market_data import format_timestamp

TRADING_DAYS = 252

# column order of the report table
REPORT_COLUMNS = ("Cumulative return", "Annual return", "Max drawdown", "Alpha", "Beta", "Sharpe")


@dataclass(frozen=True)
class EquityCurve:
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        ts = np.asarray(self.timestamps)
        if v.shape != ts.shape[:1] or v.ndim != 1:
            raise DataError("timestamps and values must have equal length")
        if np.any(~(v > 0)):
            raise DataError("equity values must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def returns(self) -> np.ndarray:
        return self.values[1:] / self.values[:-1] - 1.0

    def normalized(self) -> np.ndarray:
        return self.values / self.values[0]


def _values(e: EquityCurve | np.ndarray) -> np.ndarray:
    return e.values if isinstance(e, EquityCurve) else np.asarray(e, dtype=np.float64)


def cumulative_return(e: EquityCurve | np.ndarray) -> float:
    v = _values(e)
    if v.shape[0] < 2:
        raise DataError("need at least two equity points")
    return float(v[-1] / v[0] - 1.0)


def annual_return(e: EquityCurve | np.ndarray, trading_days_per_year: float = TRADING_DAYS) -> float:
    """Geometric annualisation; the span in years is the number of bar-to-bar steps over ``trading_days_per_year``."""
    v = _values(e)
    cum = cumulative_return(v)
    years = (v.shape[0] - 1) / trading_days_per_year
    return float((1.0 + cum) ** (1.0 / years) - 1.0)


def max_drawdown(e: EquityCurve | np.ndarray) -> float:
    v = np.ascontiguousarray(_values(e))
    if v.shape[0] == 0:
        raise DataError("empty equity curve")
    return float(kernels.running_drawdown(v).max())


def sharpe(returns: np.ndarray, rf_annual: float = 0.0, periods_per_year: float = TRADING_DAYS) -> float:
    """Annualised Sharpe ratio of per-bar simple returns; NaN when volatility is zero."""
    r = np.asarray(returns, dtype=np.float64)
    if r.shape[0] < 2:
        raise DataError("need at least two returns")
    sd = r.std(ddof=1)
    if not sd > 0 or sd < 1e-15 * max(1.0, float(np.abs(r).max())):
        return float("nan")
    excess = r.mean() - rf_annual / periods_per_year
    return float(excess / sd * math.sqrt(periods_per_year))


def alpha_beta(strategy_returns: np.ndarray, market_returns: np.ndarray, rf_annual: float = 0.0,
               periods_per_year: float = TRADING_DAYS) -> tuple[float, float]:
    """CAPM regression of per-bar returns: ``(annualised alpha, beta)``; NaNs if the market is flat."""
    s = np.asarray(strategy_returns, dtype=np.float64)
    m = np.asarray(market_returns, dtype=np.float64)
    if s.shape != m.shape or s.shape[0] < 2:
        raise DataError("need two equal-length return series of length >= 2")
    var_m = m.var(ddof=1)
    if not var_m > 0:
        return float("nan"), float("nan")
    beta = float(np.cov(s, m, ddof=1)[0, 1] / var_m)
    rf_bar = rf_annual / periods_per_year
    alpha = (s.mean() - rf_bar - beta * (m.mean() - rf_bar)) * periods_per_year
    return float(alpha), beta


@dataclass(frozen=True)
class MetricsConfig:
    rf_annual: float = 0.0
    periods_per_year: float = TRADING_DAYS


@dataclass(frozen=True)
class BacktestReport:
    strategy: str
    cumulative_return: float
    annual_return: float
    max_drawdown: float
    alpha: float | None
    beta: float | None
    sharpe: float | None
    dataset: str = ""
    span: str = ""
    seed: int | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def row(self) -> dict[str, str]:
        def fmt(x: float | None) -> str:
            if x is None:
                return "-"
            if math.isnan(x):
                return "nan"
            return f"{x:.10g}"

        vals = (self.cumulative_return, self.annual_return, self.max_drawdown, self.alpha, self.beta, self.sharpe)
        out = {"Stock": self.dataset, "Span": self.span, "Strategy": self.strategy,
               "Seed": "" if self.seed is None else str(self.seed)}
        out.update({c: fmt(v) for c, v in zip(REPORT_COLUMNS, vals)})
        out["Flags"] = ";".join(self.flags)
        return out


def build_report(e: EquityCurve, market: EquityCurve, cfg: MetricsConfig = MetricsConfig(), *,
                 strategy: str = "", dataset: str = "", span: str = "", seed: int | None = None,
                 is_market: bool = False) -> BacktestReport:
    """All report metrics for ``e`` against ``market``.

    ``is_market`` marks the buy-and-hold index row, which carries no alpha,
    beta or Sharpe.
    """
    if len(e) != len(market):
        raise DataError("strategy and market curves are not aligned")
    cum = cumulative_return(e)
    ann = annual_return(e, cfg.periods_per_year)
    mdd = max_drawdown(e)
    if is_market:
        return BacktestReport(strategy, cum, ann, mdd, None, None, None, dataset, span, seed)
    flags = []
    sr = sharpe(e.returns, cfg.rf_annual, cfg.periods_per_year)
    if math.isnan(sr):
        flags.append("sharpe_undefined")
    a, b = alpha_beta(e.returns, market.returns, cfg.rf_annual, cfg.periods_per_year)
    if math.isnan(b):
        flags.append("beta_undefined")
    return BacktestReport(strategy, cum, ann, mdd, a, b, sr, dataset, span, seed, tuple(flags))


def write_report_csv(reports: list[BacktestReport], path: str | Path) -> None:
    header = ["Stock", "Span", "Strategy", "Seed", *REPORT_COLUMNS, "Flags"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow(r.row())


def write_equity_csv(e: EquityCurve, path: str | Path) -> None:
    ts = e.timestamps
    date_only = bool(np.all(ts == ts.astype("datetime64[D]")))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "value"])
        for t, v in zip(ts, e.values):
            w.writerow([format_timestamp(t, date_only), repr(float(v))])
