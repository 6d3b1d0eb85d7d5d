import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mssddpg.env import (DISCRETE_ACTIONS, HOLD, Action, Alpha, EnvConfig, MarketBundle, Portfolio, TradingEnv,
                         encode_action, execute_trade)
from mssddpg.errors import DataError, EpisodeError


def bundle(prices, start=0, stop=None, obs_dim=3):
    prices = np.asarray(prices, dtype=float)
    n = len(prices)
    obs = np.arange(n * obs_dim, dtype=float).reshape(n, obs_dim)
    ts = np.arange(n).astype("datetime64[D]").astype("datetime64[ns]")
    return MarketBundle(prices, obs, ts, start, n if stop is None else stop)


def test_buy_all_without_fee():
    p = execute_trade(Portfolio(0, 1000.0), Action(Alpha.BUY, 1.0), 10.0, 0.0)
    assert p == Portfolio(100, 0.0)


def test_sell_half_with_fee():
    p = execute_trade(Portfolio(10, 0.0), Action(Alpha.SELL, 0.5), 10.0, 0.001)
    assert p.holdings == 5
    assert p.cash == pytest.approx(49.95, abs=1e-12)


def test_hold_and_unaffordable_buy():
    p = Portfolio(3, 5.0)
    assert execute_trade(p, HOLD, 10.0, 0.001) is p
    assert execute_trade(p, Action(Alpha.BUY, 1.0), 10.0, 0.0) == p


def test_buy_with_fee_never_overdraws():
    p = execute_trade(Portfolio(0, 1001.0), Action(Alpha.BUY, 1.0), 10.0, 0.001)
    assert p.holdings == 100 and p.cash == pytest.approx(0.0, abs=1e-9)
    assert p.cash >= 0.0


def test_bad_price():
    with pytest.raises(DataError):
        execute_trade(Portfolio(0, 1.0), HOLD, 0.0, 0.0)


@settings(max_examples=200)
@given(h=st.integers(0, 10**6), cash=st.floats(0, 1e9), price=st.floats(0.01, 1e5), w=st.floats(0, 1),
       side=st.sampled_from([Alpha.BUY, Alpha.SELL, Alpha.HOLD]), fee=st.floats(0, 0.01))
def test_trade_invariants(h, cash, price, w, side, fee):
    p = Portfolio(h, cash)
    q = execute_trade(p, Action(side, w), price, fee)
    assert q.holdings >= 0 and q.cash >= 0
    assert q.value(price) <= p.value(price) * (1 + 1e-12) + 1e-6
    if fee == 0:
        assert q.value(price) == pytest.approx(p.value(price), rel=1e-10, abs=1e-6)


def test_encode_action():
    assert encode_action(0.0) == HOLD
    assert encode_action(0.1) == HOLD and encode_action(-0.1) == HOLD
    assert encode_action(0.75) == Action(Alpha.BUY, 0.75)
    assert encode_action(-1.0) == Action(Alpha.SELL, 1.0)
    assert encode_action(3.0) == Action(Alpha.BUY, 1.0)


def test_action_normalises_hold():
    assert Action(Alpha.BUY, 0.0) == HOLD
    assert Action(Alpha.HOLD, 0.7).w == 0.0
    assert Action(Alpha.SELL, 2.0).w == 1.0


def test_discrete_grid():
    assert len(DISCRETE_ACTIONS) == 7
    assert DISCRETE_ACTIONS[3] == HOLD
    assert len(set(DISCRETE_ACTIONS)) == 7


def test_reset_full_span():
    env = TradingEnv(bundle([10, 11, 12, 13], start=1), EnvConfig(initial_cash=1e6))
    s = env.reset()
    assert (s.t, s.portfolio) == (1, Portfolio(0, 1e6))
    np.testing.assert_array_equal(s.observation, [3, 4, 5])
    assert env.state_vector().tolist() == [3, 4, 5, 0.0, 1.0]


def test_reset_random_window_reproducible():
    env = TradingEnv(bundle(np.linspace(10, 20, 100)), EnvConfig(episode_length=10))
    a = env.reset(np.random.default_rng(5)).t
    b = env.reset(np.random.default_rng(5)).t
    assert a == b
    steps = 0
    while not env.done:
        env.step(HOLD)
        steps += 1
    assert steps == 10


def test_reset_needs_data():
    with pytest.raises(DataError):
        TradingEnv(bundle([10.0]), EnvConfig())
    with pytest.raises(DataError):
        TradingEnv(bundle([10.0, 11.0, 12.0]), EnvConfig(episode_length=5))


def test_cash_hold_reward_zero():
    env = TradingEnv(bundle([10, 15, 5]), EnvConfig())
    env.reset()
    assert env.step(HOLD)[1] == 0.0


def test_mark_to_market_reward():
    env = TradingEnv(bundle([10, 10, 11]), EnvConfig(initial_cash=1000.0, fee_rate=0.0))
    env.reset()
    s, r, _ = env.step(Action(Alpha.BUY, 1.0))
    assert s.portfolio == Portfolio(100, 0.0) and r == 0.0
    assert env.step(HOLD)[1] == pytest.approx(0.10, abs=1e-12)


def test_fee_drag_reward():
    env = TradingEnv(bundle([10, 10]), EnvConfig(initial_cash=1e6, fee_rate=0.001))
    env.reset()
    _, r, done = env.step(Action(Alpha.BUY, 1.0))
    assert done
    assert r == pytest.approx(-0.000999, abs=2e-6)
    with pytest.raises(EpisodeError):
        env.step(HOLD)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), fee=st.sampled_from([0.0, 0.001, 0.01]))
def test_reward_telescopes(seed, fee):
    rng = np.random.default_rng(seed)
    prices = 50 * np.exp(np.cumsum(rng.normal(0, 0.02, 60)))
    env = TradingEnv(bundle(prices), EnvConfig(initial_cash=1e5, fee_rate=fee))
    s = env.reset()
    v0 = s.portfolio.value(prices[0])
    growth = 1.0
    while not env.done:
        s, r, _ = env.step(encode_action(rng.uniform(-1, 1)))
        growth *= 1 + r
    assert growth == pytest.approx(s.portfolio.value(prices[-1]) / v0, rel=1e-10)
