"""Hot numeric loops.

Every kernel exists twice: a numba build (``*_nb``) and a pure-numpy build
(``*_np``). The public name is bound to one of them at import time according
to :data:`mssddpg._accel.NUMBA_ENABLED`. Inherently sequential kernels (the
inclusion merge and the stroke state machine) use the same loop source for
both builds; the numpy build simply runs it in the interpreter.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._accel import NUMBA_ENABLED, njit, select

__all__ = [
    "merge_inclusions",
    "detect_shape_kinds",
    "link_strokes",
    "turtle_signals",
    "running_drawdown",
    "NUMBA_ENABLED",
]

TOP = 1
BOTTOM = -1


def _merge_loop(high, low, first_ascending):
    n = high.shape[0]
    mh = np.empty(n, dtype=np.float64)
    ml = np.empty(n, dtype=np.float64)
    start = np.empty(n, dtype=np.int64)
    end = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        ch = high[i]
        cl = low[i]
        cs = i
        # strict inclusion either way; equal edges do not count
        while m >= 1 and ((mh[m - 1] < ch and ml[m - 1] > cl) or (mh[m - 1] > ch and ml[m - 1] < cl)):
            if m >= 2:
                # equal highs fall back to the lows; this keeps every merge local to the last bar
                ascending = mh[m - 1] > mh[m - 2] or (mh[m - 1] == mh[m - 2] and ml[m - 1] > ml[m - 2])
            else:
                ascending = first_ascending
            if ascending:
                ch = max(mh[m - 1], ch)
                cl = max(ml[m - 1], cl)
            else:
                ch = min(mh[m - 1], ch)
                cl = min(ml[m - 1], cl)
            cs = start[m - 1]
            m -= 1
        mh[m] = ch
        ml[m] = cl
        start[m] = cs
        end[m] = i
        m += 1
    return mh[:m].copy(), ml[:m].copy(), start[:m].copy(), end[:m].copy()


def _shape_kinds_loop(mh, ml):
    n = mh.shape[0]
    kinds = np.zeros(n, dtype=np.int8)
    for i in range(1, n - 1):
        if mh[i - 1] < mh[i] and mh[i + 1] < mh[i] and ml[i - 1] < ml[i] and ml[i + 1] < ml[i]:
            kinds[i] = 1
        elif mh[i - 1] > mh[i] and mh[i + 1] > mh[i] and ml[i - 1] > ml[i] and ml[i + 1] > ml[i]:
            kinds[i] = -1
    return kinds


def _shape_kinds_np(mh, ml):
    mh = np.asarray(mh, dtype=np.float64)
    ml = np.asarray(ml, dtype=np.float64)
    kinds = np.zeros(mh.shape[0], dtype=np.int8)
    if mh.shape[0] < 3:
        return kinds
    h0, h1, h2 = mh[:-2], mh[1:-1], mh[2:]
    l0, l1, l2 = ml[:-2], ml[1:-1], ml[2:]
    top = (h0 < h1) & (h2 < h1) & (l0 < l1) & (l2 < l1)
    bottom = (h0 > h1) & (h2 > h1) & (l0 > l1) & (l2 > l1)
    kinds[1:-1][top] = 1
    kinds[1:-1][bottom] = -1
    return kinds


def _link_loop(centers, kinds, pivots, min_bars):
    """Greedy alternating linker.

    Returns the indices (into the shape list) of the stroke endpoints and, for
    every shape, the endpoint count right after that shape was processed.
    """
    ns = centers.shape[0]
    pts = np.empty(ns, dtype=np.int64)
    count_after = np.empty(ns, dtype=np.int64)
    npts = 0
    for k in range(ns):
        if npts == 0:
            pts[0] = k
            npts = 1
        else:
            last = pts[npts - 1]
            if kinds[k] == kinds[last]:
                if (kinds[k] == 1 and pivots[k] > pivots[last]) or (kinds[k] == -1 and pivots[k] < pivots[last]):
                    pts[npts - 1] = k
            else:
                ok = centers[k] - centers[last] + 1 >= min_bars
                if kinds[last] == -1:
                    ok = ok and pivots[k] > pivots[last]
                else:
                    ok = ok and pivots[k] < pivots[last]
                if ok:
                    pts[npts] = k
                    npts += 1
        count_after[k] = npts
    return pts[:npts].copy(), count_after


def _turtle_loop(close, entry, exit_):
    n = close.shape[0]
    out = np.zeros(n, dtype=np.int8)
    for t in range(n):
        if t >= entry:
            hi = close[t - entry]
            for j in range(t - entry + 1, t):
                if close[j] > hi:
                    hi = close[j]
            if close[t] > hi:
                out[t] = 1
                continue
        if t >= exit_:
            lo = close[t - exit_]
            for j in range(t - exit_ + 1, t):
                if close[j] < lo:
                    lo = close[j]
            if close[t] < lo:
                out[t] = -1
    return out


def _turtle_np(close, entry, exit_):
    close = np.asarray(close, dtype=np.float64)
    n = close.shape[0]
    out = np.zeros(n, dtype=np.int8)
    if n > exit_:
        lo = sliding_window_view(close[:-1], exit_).min(axis=1)
        sell = close[exit_:] < lo
        out[exit_:][sell] = -1
    if n > entry:
        hi = sliding_window_view(close[:-1], entry).max(axis=1)
        buy = close[entry:] > hi
        out[entry:][buy] = 1
    return out


def _drawdown_loop(values):
    n = values.shape[0]
    out = np.empty(n, dtype=np.float64)
    peak = -np.inf
    for i in range(n):
        if values[i] > peak:
            peak = values[i]
        out[i] = (peak - values[i]) / peak
    return out


def _drawdown_np(values):
    values = np.asarray(values, dtype=np.float64)
    peak = np.maximum.accumulate(values)
    return (peak - values) / peak


merge_inclusions_np = _merge_loop
merge_inclusions_nb = njit(_merge_loop)
detect_shape_kinds_np = _shape_kinds_np
detect_shape_kinds_nb = njit(_shape_kinds_loop)
link_strokes_np = _link_loop
link_strokes_nb = njit(_link_loop)
turtle_signals_np = _turtle_np
turtle_signals_nb = njit(_turtle_loop)
running_drawdown_np = _drawdown_np
running_drawdown_nb = njit(_drawdown_loop)

merge_inclusions = select(merge_inclusions_nb, merge_inclusions_np)
detect_shape_kinds = select(detect_shape_kinds_nb, detect_shape_kinds_np)
link_strokes = select(link_strokes_nb, link_strokes_np)
turtle_signals = select(turtle_signals_nb, turtle_signals_np)
running_drawdown = select(running_drawdown_nb, running_drawdown_np)

BACKENDS = {
    "numba": {
        "merge_inclusions": merge_inclusions_nb,
        "detect_shape_kinds": detect_shape_kinds_nb,
        "link_strokes": link_strokes_nb,
        "turtle_signals": turtle_signals_nb,
        "running_drawdown": running_drawdown_nb,
    },
    "numpy": {
        "merge_inclusions": merge_inclusions_np,
        "detect_shape_kinds": detect_shape_kinds_np,
        "link_strokes": link_strokes_np,
        "turtle_signals": turtle_signals_np,
        "running_drawdown": running_drawdown_np,
    },
}
