import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mssddpg.errors import DataError, FormatError, OrderError, ScaleError, SpecError
from mssddpg.market_data import (DAY, MIN10, MONTH, WEEK, BarSeries, SynthSpec, TimeScale, load_csv, resample,
                                 save_csv, synth_series)

HEADER = "timestamp,open,high,low,close,volume\n"


def write(tmp_path, body, header=HEADER):
    p = tmp_path / "bars.csv"
    p.write_text(header + body)
    return p


def test_load_three_rows(tmp_path):
    p = write(tmp_path, "2021-01-04,10,12,9,11,5\n2021-01-05,11,15,10,14,7\n2021-01-06,14,14,13,13.5,0\n")
    s = load_csv(p, DAY)
    assert len(s) == 3
    assert s[1].high == 15.0
    assert s.timestamp[0] == np.datetime64("2021-01-04")


def test_high_below_low_reports_row(tmp_path):
    p = write(tmp_path, "2021-01-04,10,12,9,11,5\n2021-01-05,11,9,10,10,7\n")
    with pytest.raises(DataError) as exc:
        load_csv(p, DAY)
    assert exc.value.row == 2


def test_duplicate_timestamp(tmp_path):
    p = write(tmp_path, "2021-01-04,10,12,9,11,5\n2021-01-04,11,15,10,14,7\n")
    with pytest.raises(OrderError):
        load_csv(p, DAY)


@pytest.mark.parametrize("header", ["timestamp,open,high,low,close\n", "date,open,high,low,close,volume\n",
                                    "timestamp,open,high,low,close,volume,extra\n"])
def test_bad_header(tmp_path, header):
    with pytest.raises(FormatError):
        load_csv(write(tmp_path, "", header=header), DAY)


def test_negative_volume_and_garbage(tmp_path):
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "2021-01-04,10,12,9,11,-1\n"), DAY)
    with pytest.raises(DataError) as exc:
        load_csv(write(tmp_path, "2021-01-04,10,12,9,11,1\n2021-01-05,x,12,9,11,1\n"), DAY)
    assert exc.value.row == 2


def test_rfc3339_offsets_become_utc(tmp_path):
    p = write(tmp_path, "2021-01-04T09:30:00+08:00,10,12,9,11,5\n")
    s = load_csv(p, MIN10)
    assert s.timestamp[0] == np.datetime64("2021-01-04T01:30:00")


def test_save_load_roundtrip(tmp_path):
    s = synth_series(SynthSpec("random-walk", 40, 3))
    save_csv(s, tmp_path / "x.csv")
    assert load_csv(tmp_path / "x.csv", DAY) == s


def test_resample_week_example():
    ts = pd.to_datetime(["2021-01-04", "2021-01-05"]).to_numpy("datetime64[ns]")
    s = BarSeries(DAY, ts, [10, 11], [12, 15], [9, 10], [11, 14], [5, 7])
    w = resample(s, WEEK)
    assert len(w) == 1
    assert (w.open[0], w.high[0], w.low[0], w.close[0], w.volume[0]) == (10, 15, 9, 14, 12)


def test_resample_single_bar_identity():
    s = synth_series(SynthSpec("random-walk", 1, 0))
    w = resample(s, WEEK)
    assert (w.open[0], w.high[0], w.low[0], w.close[0], w.volume[0]) == (s.open[0], s.high[0], s.low[0],
                                                                          s.close[0], s.volume[0])


def test_resample_rejects_finer_or_equal():
    s = synth_series(SynthSpec("random-walk", 10, 0))
    with pytest.raises(ScaleError):
        resample(s, MIN10)
    with pytest.raises(ScaleError):
        resample(s, DAY)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 300))
def test_resample_properties(seed, n):
    s = synth_series(SynthSpec("random-walk", n, seed))
    w = resample(s, WEEK)
    assert w.volume.sum() == pytest.approx(s.volume.sum(), rel=1e-12)
    keys = WEEK.bucket_keys(s.timestamp)
    for j, k in enumerate(np.unique(keys)):
        m = keys == k
        assert w.high[j] == s.high[m].max()
        assert w.low[j] == s.low[m].min()
        assert w.open[j] == s.open[m][0] and w.close[j] == s.close[m][-1]


def test_resample_composes_from_minutes():
    s = synth_series(SynthSpec("random-walk", 2000, 5, {"scale": "10min"}))
    assert resample(resample(s, DAY), WEEK) == resample(s, WEEK)
    assert resample(resample(s, DAY), MONTH) == resample(s, MONTH)


def test_timescale_parse_and_order():
    assert TimeScale.parse("min10") == MIN10 == TimeScale.parse("10min")
    assert MIN10 < DAY < WEEK < MONTH
    with pytest.raises(ScaleError):
        TimeScale.parse("fortnight")


def test_synth_deterministic():
    spec = SynthSpec("random-walk", 200, 11, {"vol": 0.02})
    a, b = synth_series(spec), synth_series(spec)
    assert a == b
    assert a.close.tobytes() == b.close.tobytes()
    assert synth_series(SynthSpec("random-walk", 200, 12)) != a


def test_synth_sine_matches_formula():
    s = synth_series(SynthSpec("sine", 300, 0, {"period": 50, "amplitude": 10, "offset": 100}))
    t = np.arange(300)
    np.testing.assert_allclose(s.close, 100 + 10 * np.sin(2 * np.pi * t / 50), atol=1e-12)
    np.testing.assert_allclose(s.open[1:], s.close[:-1], atol=0)
    assert np.all(s.low <= np.minimum(s.open, s.close)) and np.all(s.high >= np.maximum(s.open, s.close))


def test_synth_flat_trend():
    s = synth_series(SynthSpec("trend", 50, 0, {"slope": 0}))
    assert np.all(s.close == s.close[0])


def test_synth_errors():
    with pytest.raises(SpecError):
        synth_series(SynthSpec("sine", 0))
    with pytest.raises(SpecError):
        synth_series(SynthSpec("noise", 10))


def test_series_is_read_only():
    s = synth_series(SynthSpec("trend", 5))
    with pytest.raises(ValueError):
        s.close[0] = 1.0
