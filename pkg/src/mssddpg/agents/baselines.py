"""Rule-based reference strategies: buy-and-hold and the 20/10 turtle breakout."""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..env import HOLD, Action, Alpha, TradingEnv
from ..market_data import BarSeries

TURTLE_ENTRY = 20
TURTLE_EXIT = 10

BUY_ALL = Action(Alpha.BUY, 1.0)
SELL_ALL = Action(Alpha.SELL, 1.0)


def turtle_signals(close: np.ndarray, entry: int = TURTLE_ENTRY, exit: int = TURTLE_EXIT) -> np.ndarray:
    """+1 where the close breaks above the prior ``entry`` closes, -1 below the prior ``exit`` closes."""
    return kernels.turtle_signals(np.ascontiguousarray(close, dtype=np.float64), entry, exit)


def _signal_action(sig: int) -> Action:
    return BUY_ALL if sig > 0 else SELL_ALL if sig < 0 else HOLD


def turtle_decide(history: BarSeries, entry: int = TURTLE_ENTRY, exit: int = TURTLE_EXIT) -> Action:
    """Decision at the last bar of ``history``; too little history means Hold."""
    close = history.close[-(max(entry, exit) + 1):]
    if len(close) == 0:
        return HOLD
    return _signal_action(int(turtle_signals(close, entry, exit)[-1]))


def buy_and_hold_decide(t: int, first: int) -> Action:
    return BUY_ALL if t == first else HOLD


class BuyAndHoldPolicy:
    name = "B&H"

    def __init__(self) -> None:
        self.first: int | None = None

    def reset(self, env: TradingEnv) -> None:
        self.first = env.state.t

    def act(self, env: TradingEnv) -> Action:
        return buy_and_hold_decide(env.state.t, self.first)


class TurtlePolicy:
    name = "Turtle"

    def __init__(self, close: np.ndarray, entry: int = TURTLE_ENTRY, exit: int = TURTLE_EXIT) -> None:
        # trailing windows only, so computing over the whole series is causal
        self.signals = turtle_signals(close, entry, exit)

    def reset(self, env: TradingEnv) -> None:
        pass

    def act(self, env: TradingEnv) -> Action:
        return _signal_action(int(self.signals[env.state.t]))
