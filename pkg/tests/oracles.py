"""Slow, obviously-correct reference implementations used by the tests.

None of these import the package's kernels; they are written from the
rules directly so that agreement is meaningful.
"""

from __future__ import annotations

import numpy as np


def contains(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """Strict containment of range ``b`` in range ``a``; ranges are (low, high)."""
    return a[0] < b[0] and a[1] > b[1]


def inclusion_pairs(lows, highs) -> int:
    n = 0
    for i in range(len(lows) - 1):
        a, b = (lows[i], highs[i]), (lows[i + 1], highs[i + 1])
        if contains(a, b) or contains(b, a):
            n += 1
    return n


def merge_reference(lows, highs, first_up: bool = True) -> list[tuple[float, float]]:
    """List-based inclusion removal: merged (low, high) pairs."""
    out: list[list[float]] = []
    for lo, hi in zip(lows, highs):
        cur = [float(lo), float(hi)]
        while out and (contains(tuple(out[-1]), tuple(cur)) or contains(tuple(cur), tuple(out[-1]))):
            prev = out.pop()
            if out:
                up = prev[1] > out[-1][1] or (prev[1] == out[-1][1] and prev[0] > out[-1][0])
            else:
                up = first_up
            pick = max if up else min
            cur = [pick(prev[0], cur[0]), pick(prev[1], cur[1])]
        out.append(cur)
    return [tuple(x) for x in out]


def shapes_brute(lows, highs) -> list[tuple[int, int]]:
    """Every 3-window checked on its own: (centre, +1 top / -1 bottom)."""
    found = []
    for c in range(1, len(lows) - 1):
        l3 = lows[c - 1:c + 2]
        h3 = highs[c - 1:c + 2]
        if h3[1] > h3[0] and h3[1] > h3[2] and l3[1] > l3[0] and l3[1] > l3[2]:
            found.append((c, 1))
        elif h3[1] < h3[0] and h3[1] < h3[2] and l3[1] < l3[0] and l3[1] < l3[2]:
            found.append((c, -1))
    return found


def strokes_reference(shapes: list[tuple[int, int, float]], min_bars: int = 5) -> list[tuple[int, int]]:
    """Greedy alternating linker over (centre, kind, pivot) triples.

    Returns stroke endpoints as (centre_a, centre_b).
    """
    chain: list[tuple[int, int, float]] = []
    for s in shapes:
        if not chain:
            chain.append(s)
            continue
        last = chain[-1]
        if s[1] == last[1]:
            more_extreme = s[2] > last[2] if s[1] == 1 else s[2] < last[2]
            if more_extreme:
                chain[-1] = s
            continue
        far_enough = s[0] - last[0] + 1 >= min_bars
        ordered = s[2] > last[2] if last[1] == -1 else s[2] < last[2]
        if far_enough and ordered:
            chain.append(s)
    return [(a[0], b[0]) for a, b in zip(chain, chain[1:])]


def drawdown_brute(values) -> float:
    worst = 0.0
    for j in range(len(values)):
        for i in range(j + 1):
            worst = max(worst, 1.0 - values[j] / values[i])
    return worst


def turtle_brute(close, entry: int = 20, exit_: int = 10) -> list[int]:
    out = []
    for t in range(len(close)):
        sig = 0
        if t >= entry and close[t] > max(close[t - entry:t]):
            sig = 1
        elif t >= exit_ and close[t] < min(close[t - exit_:t]):
            sig = -1
        out.append(sig)
    return out


def value_iteration(rewards: np.ndarray, next_state: np.ndarray, gamma: float, iters: int = 2000) -> np.ndarray:
    """Q* for a deterministic finite MDP given as tables indexed [state, action]."""
    q = np.zeros_like(rewards, dtype=np.float64)
    for _ in range(iters):
        q = rewards + gamma * q.max(axis=1)[next_state]
    return q


def central_difference(f, x: np.ndarray, idx, h: float = 1e-5) -> float:
    old = x[idx]
    x[idx] = old + h
    up = f()
    x[idx] = old - h
    down = f()
    x[idx] = old
    return (up - down) / (2.0 * h)


def gradient_check(p, x: np.ndarray, upstream: np.ndarray, per_array: int | None = None, rng=None,
                   h: float = 1e-5, floor: float = 1e-6) -> float:
    """Max relative error between :func:`mssddpg.nn.backward` and central differences.

    The loss is ``sum(upstream * f(x))``. ``per_array`` limits the number of
    checked entries per parameter array (chosen by ``rng``); relative errors
    use ``max(|a| + |n|, floor)`` as denominator so exact zeros do not divide by zero.
    """
    from mssddpg.nn import backward, forward

    arrays = [a.copy() for a in p.arrays()]
    net = p.with_arrays(arrays)
    _, cache = forward(net, x)
    grads, _ = backward(net, cache, upstream)

    def loss():
        # arrays are mutated in place, so rebuild to refresh the token
        return float(np.sum(upstream * forward(net.with_arrays(arrays), x)[0]))

    worst = 0.0
    for arr, g in zip(arrays, grads):
        flat = list(np.ndindex(arr.shape))
        if per_array is not None and len(flat) > per_array:
            pick = rng.choice(len(flat), size=per_array, replace=False)
            flat = [flat[i] for i in pick]
        for idx in flat:
            num = central_difference(loss, arr, idx, h)
            ana = float(g[idx])
            worst = max(worst, abs(ana - num) / max(abs(ana) + abs(num), floor))
    return worst
