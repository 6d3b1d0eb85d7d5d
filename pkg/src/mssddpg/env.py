"""Single-asset trading MDP with integer shares, cash and proportional fees."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, EpisodeError

PORTFOLIO_FEATURES = 2  # position weight, cash weight


class Alpha(enum.Enum):
    BUY = "buy"
    HOLD = "hold"
    SELL = "sell"


@dataclass(frozen=True)
class Action:
    """Trade directive; ``w`` is the fraction of cash (buy) or shares (sell) to trade."""

    alpha: Alpha
    w: float = 0.0

    def __post_init__(self) -> None:
        w = min(max(float(self.w), 0.0), 1.0)
        if self.alpha is Alpha.HOLD or w == 0.0:
            object.__setattr__(self, "alpha", Alpha.HOLD)
            w = 0.0
        object.__setattr__(self, "w", w)


HOLD = Action(Alpha.HOLD)


@dataclass(frozen=True)
class Portfolio:
    holdings: int = 0
    cash: float = 0.0

    def value(self, price: float) -> float:
        return self.cash + self.holdings * price


def execute_trade(p: Portfolio, a: Action, price: float, fee_rate: float) -> Portfolio:
    """Fill ``a`` at ``price``, flooring to whole shares so cash never goes negative."""
    if not price > 0:
        raise DataError(f"trade price must be positive, got {price}")
    if a.alpha is Alpha.BUY:
        unit = price * (1.0 + fee_rate)
        shares = int(math.floor(a.w * p.cash / unit))
        if shares <= 0:
            return p
        cash = p.cash - shares * unit
        # floor absorbs rounding noise from the division above
        return Portfolio(p.holdings + shares, max(cash, 0.0))
    if a.alpha is Alpha.SELL:
        shares = int(math.floor(a.w * p.holdings))
        if shares <= 0:
            return p
        return Portfolio(p.holdings - shares, p.cash + shares * price * (1.0 - fee_rate))
    return p


def encode_action(raw: float, dead_zone: float = 0.1) -> Action:
    """Map an actor output in [-1, 1] onto (alpha, w)."""
    x = min(max(float(raw), -1.0), 1.0)
    if x > dead_zone:
        return Action(Alpha.BUY, x)
    if x < -dead_zone:
        return Action(Alpha.SELL, -x)
    return HOLD


# discrete action grid used by DQN: Sell x3, Hold, Buy x3
DISCRETE_ACTIONS: tuple[Action, ...] = (
    tuple(Action(Alpha.SELL, w) for w in (1.0, 0.5, 0.25))
    + (HOLD,)
    + tuple(Action(Alpha.BUY, w) for w in (0.25, 0.5, 1.0))
)


def decode_discrete(index: int) -> Action:
    return DISCRETE_ACTIONS[index]


@dataclass(frozen=True)
class EnvConfig:
    fee_rate: float = 0.001
    initial_cash: float = 1_000_000.0
    episode_length: int | None = None  # None: run the whole span

    def __post_init__(self) -> None:
        if self.fee_rate < 0:
            raise ValueError("fee_rate must be non-negative")
        if self.initial_cash <= 0:
            raise ValueError("initial_cash must be positive")


@dataclass(frozen=True)
class MarketBundle:
    """Prices plus precomputed per-bar observations for one instrument.

    Decisions may be taken at indices in ``[start, stop - 1)``; the last bar
    only marks the final value.
    """

    close: np.ndarray
    observations: np.ndarray
    timestamps: np.ndarray
    start: int
    stop: int

    def __post_init__(self) -> None:
        if self.observations.shape[0] != self.close.shape[0]:
            raise DataError("one observation per bar required")
        if not 0 <= self.start < self.stop <= self.close.shape[0]:
            raise DataError(f"bad span [{self.start}, {self.stop}) for {self.close.shape[0]} bars")

    def span(self, start: int, stop: int) -> MarketBundle:
        return replace(self, start=start, stop=stop)

    @property
    def obs_dim(self) -> int:
        return self.observations.shape[1]


@dataclass(frozen=True)
class EnvState:
    observation: np.ndarray
    portfolio: Portfolio
    t: int

    def vector(self, price: float) -> np.ndarray:
        """Agent input: flattened observation followed by position and cash weights."""
        v = self.portfolio.value(price)
        pos = self.portfolio.holdings * price / v
        return np.concatenate([self.observation, [pos, self.portfolio.cash / v]])


class TradingEnv:
    """Close-to-close trading episodes over a :class:`MarketBundle` span."""

    def __init__(self, bundle: MarketBundle, cfg: EnvConfig) -> None:
        self.bundle = bundle
        self.cfg = cfg
        if bundle.stop - bundle.start < 2:
            raise DataError("span too short for a single step")
        if cfg.episode_length is not None and cfg.episode_length > bundle.stop - bundle.start - 1:
            raise DataError("episode_length exceeds the available span")
        self.state: EnvState | None = None
        self.end = bundle.stop - 1
        self.done = True

    @property
    def state_dim(self) -> int:
        return self.bundle.obs_dim + PORTFOLIO_FEATURES

    def reset(self, rng: np.random.Generator | None = None) -> EnvState:
        b = self.bundle
        if self.cfg.episode_length is None:
            t0, self.end = b.start, b.stop - 1
        else:
            if rng is None:
                raise ValueError("random-window episodes need an rng")
            last_start = b.stop - 1 - self.cfg.episode_length
            t0 = int(rng.integers(b.start, last_start + 1))
            self.end = t0 + self.cfg.episode_length
        self.state = EnvState(b.observations[t0], Portfolio(0, self.cfg.initial_cash), t0)
        self.done = False
        return self.state

    def price(self, t: int | None = None) -> float:
        return float(self.bundle.close[self.state.t if t is None else t])

    def state_vector(self) -> np.ndarray:
        return self.state.vector(self.price())

    def step(self, action: Action) -> tuple[EnvState, float, bool]:
        if self.done or self.state is None:
            raise EpisodeError("step() called on a finished episode; call reset()")
        s = self.state
        px = self.price()
        before = s.portfolio.value(px)
        port = execute_trade(s.portfolio, action, px, self.cfg.fee_rate)
        t = s.t + 1
        after = port.value(float(self.bundle.close[t]))
        reward = (after - before) / before
        self.state = EnvState(self.bundle.observations[t], port, t)
        self.done = t >= self.end
        return self.state, reward, self.done
