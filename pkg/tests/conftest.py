from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from mssddpg.market_data import DAY, BarSeries, SynthSpec, TimeScale, synth_series


def bars_from_ranges(lows, highs, volumes=None, scale: TimeScale = DAY, start: str = "2020-01-01") -> BarSeries:
    """Series whose open and close sit at the bar midpoint."""
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    mid = (lows + highs) / 2.0
    vol = np.ones_like(lows) if volumes is None else np.asarray(volumes, dtype=float)
    ts = pd.date_range(start, periods=len(lows), freq="D").to_numpy("datetime64[ns]")
    return BarSeries(scale, ts, mid, highs, lows, mid, vol)


def zigzag_levels(levels) -> BarSeries:
    """Bars spanning ``[m, m + 2]`` for each level ``m``; distinct neighbours never include each other."""
    m = np.asarray(levels, dtype=float)
    return bars_from_ranges(m, m + 2.0)


def random_walk(seed: int, length: int = 500, **params) -> BarSeries:
    return synth_series(SynthSpec("random-walk", length, seed, params))


# Bottom at merged bar 2 (low 10), Top at 8 (high 20), Bottom at 14 (low 12)
ZIGZAG_LEVELS = [12, 11, 10, 10 + 4 / 3, 10 + 8 / 3, 14, 14 + 4 / 3, 14 + 8 / 3, 18,
                 17, 16, 15, 14, 13, 12, 13, 14]


@pytest.fixture
def zigzag() -> BarSeries:
    return zigzag_levels(ZIGZAG_LEVELS)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
