import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_walk
from mssddpg.agents import (BuyAndHoldPolicy, DDPGHyper, DDPGPolicy, DQNHyper, TrainConfig, TurtlePolicy,
                            actor_gradients, buy_and_hold_decide, critic_targets, ddpg_act, ddpg_train_step,
                            dqn_targets, dqn_train_step, evaluate, load_agent, make_ddpg, make_dqn, prepare_bundle,
                            save_agent, train, turtle_decide, turtle_signals)
from mssddpg.agents.baselines import BUY_ALL, SELL_ALL
from mssddpg.agents.ddpg import DDPGAgent
from mssddpg.env import HOLD, EnvConfig, MarketBundle
from mssddpg.errors import NotReadyError, ShapeError
from mssddpg.features import RAW_WINDOW_CONFIG
from mssddpg.market_data import SynthSpec, synth_series
from mssddpg.nn import Batch, MLPParams, ReplayBuffer
from oracles import turtle_brute


def ramp(n, start=100.0, step=1.0):
    return synth_series(SynthSpec("trend", n, 0, {"start_price": start, "slope": step}))


def test_turtle_ramp_first_buy_at_bar_21():
    s = ramp(40)
    sig = turtle_signals(s.close)
    assert np.flatnonzero(sig == 1)[0] == 20
    assert turtle_decide(s.slice(0, 20)) == HOLD
    assert turtle_decide(s.slice(0, 21)) == BUY_ALL


def test_turtle_flat_never_trades():
    s = synth_series(SynthSpec("trend", 60, 0, {"slope": 0}))
    assert not turtle_signals(s.close).any()


def test_turtle_sells_below_prior_ten():
    close = np.concatenate([100 + np.arange(25.0), [100.0]])
    sig = turtle_signals(close)
    assert sig[25] == -1
    assert not (sig[:25] == -1).any()
    assert turtle_decide(synth_series(SynthSpec("trend", 26, 0)).slice(0, 25)) != SELL_ALL


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 8), min_size=0, max_size=70))
def test_turtle_matches_brute_force(closes):
    c = np.asarray(closes, dtype=float)
    assert turtle_signals(c).tolist() == turtle_brute(c.tolist())


def test_buy_and_hold_rule():
    assert buy_and_hold_decide(5, 5) == BUY_ALL
    assert buy_and_hold_decide(6, 5) == HOLD


def _bundle(series, start=0):
    obs = np.zeros((len(series), 2))
    return MarketBundle(series.close, obs, series.timestamp, start, len(series))


def test_buy_and_hold_tracks_closes():
    s = random_walk(2, 200)
    # 1e9 cash makes whole-share rounding negligible
    e = evaluate(BuyAndHoldPolicy(), _bundle(s), EnvConfig(fee_rate=0.0, initial_cash=1e9))
    np.testing.assert_allclose(e.normalized(), s.close / s.close[0], rtol=1e-6)


def test_turtle_flat_equity_constant():
    s = synth_series(SynthSpec("trend", 80, 0, {"slope": 0}))
    e = evaluate(TurtlePolicy(s.close), _bundle(s), EnvConfig())
    assert np.all(e.values == 1e6)


def small_ddpg(state_dim=3, **kw):
    return make_ddpg(state_dim, DDPGHyper(actor_hidden=(4,), critic_hidden=(4,), warmup_steps=0, batch_size=2,
                                          replay_capacity=50, **kw), seed=0)


def test_ddpg_act_deterministic_and_noisy():
    ag = small_ddpg()
    x = np.array([0.1, -0.2, 0.3])
    assert ddpg_act(ag, x) == ddpg_act(ag, x)
    a = ddpg_act(ag, x, explore=True, rng=np.random.default_rng(1))
    b = ddpg_act(ag, x, explore=True, rng=np.random.default_rng(1))
    assert a == b and -1 <= a <= 1
    with pytest.raises(ShapeError):
        ddpg_act(ag, np.zeros(4))


def test_zeroed_actor_holds():
    s = random_walk(3, 80)
    bundle = prepare_bundle(s, "ddpg", start=0)
    ag = make_ddpg(bundle.obs_dim + 2, DDPGHyper(actor_hidden=(8,), critic_hidden=(8,)), 0)
    ag.actor = ag.actor.with_arrays([np.zeros_like(a) for a in ag.actor.arrays()])
    assert ddpg_act(ag, np.ones(bundle.obs_dim + 2)) == 0.0
    e = evaluate(DDPGPolicy(ag), bundle, EnvConfig())
    assert np.all(e.values == 1e6)


def batch(states, actions, rewards, next_states, dones):
    f = lambda x: np.atleast_2d(np.asarray(x, dtype=float))
    return Batch(f(states), f(actions), np.asarray(rewards, float), f(next_states), np.asarray(dones, float))


def test_terminal_targets_are_rewards():
    ag = small_ddpg()
    b = batch(np.ones((2, 3)), [[0.5], [-0.5]], [1.5, -2.0], np.ones((2, 3)), [1, 1])
    np.testing.assert_array_equal(critic_targets(ag, b), [1.5, -2.0])


def test_constant_critic_gives_zero_actor_gradient():
    ag = small_ddpg()
    flat = ag.critic.with_arrays([np.zeros_like(a) for a in ag.critic.arrays()[:-1]] + [np.array([4.0])])
    grads, q = actor_gradients(ag.actor, flat, np.random.default_rng(0).standard_normal((5, 3)))
    assert q == 4.0
    assert all(not g.any() for g in grads)


def hand_agent(gamma):
    # critic Q(s, a) = 0.5 s + 2 a + 0.1, target actor a'(s) = tanh(0 s) = 0
    critic = MLPParams((np.array([[0.5], [2.0]]),), (np.array([0.1]),), ("identity",))
    actor = MLPParams((np.array([[0.0]]),), (np.array([0.0]),), ("tanh",))
    hyper = DDPGHyper(gamma=gamma, warmup_steps=0, batch_size=1, actor_hidden=(), critic_hidden=())
    return DDPGAgent(actor, critic, actor.copy(), critic.copy(), ReplayBuffer(4, 1, 1), hyper)


def test_single_transition_critic_loss_by_hand():
    loss, objective = ddpg_train_step(hand_agent(0.5), batch([[1.0]], [[0.25]], [2.0], [[2.0]], [1]))
    assert loss == pytest.approx(0.81, abs=1e-12)  # (1.1 - 2)^2
    loss, _ = ddpg_train_step(hand_agent(0.5), batch([[1.0]], [[0.25]], [2.0], [[2.0]], [0]))
    assert loss == pytest.approx(2.1025, abs=1e-12)  # y = 2 + 0.5 * 1.1


def test_ddpg_train_step_requires_warmup():
    ag = make_ddpg(3, DDPGHyper(actor_hidden=(4,), critic_hidden=(4,), warmup_steps=10, batch_size=2), 0)
    with pytest.raises(NotReadyError):
        ddpg_train_step(ag)


def test_ddpg_training_moves_critic_toward_targets():
    ag = small_ddpg(lr_critic=1e-2)
    b = batch(np.eye(3)[:2], [[0.3], [-0.3]], [1.0, -1.0], np.eye(3)[:2], [1, 1])
    first, _ = ddpg_train_step(ag, b)
    for _ in range(300):
        last, _ = ddpg_train_step(ag, b)
    assert last < first * 0.01


def test_dqn_targets_gamma_zero_and_terminal():
    ag = make_dqn(2, 3, DQNHyper(gamma=0.0, hidden=(4,)), 0)
    b = batch([[1, 0], [0, 1]], [[0], [2]], [0.5, -1.0], [[5, 5], [-5, 3]], [0, 0])
    np.testing.assert_array_equal(dqn_targets(ag, b), [0.5, -1.0])
    ag = make_dqn(2, 3, DQNHyper(gamma=0.9, hidden=(4,)), 0)
    np.testing.assert_array_equal(dqn_targets(ag, b._replace(dones=np.ones(2))), [0.5, -1.0])


def test_dqn_hard_sync():
    ag = make_dqn(2, 3, DQNHyper(hidden=(4,), target_sync_period=3, warmup_steps=0), 0)
    b = batch([[1, 0]], [[1]], [1.0], [[0, 1]], [0])
    before = ag.qnet_target.arrays()[0].copy()
    dqn_train_step(ag, b)
    dqn_train_step(ag, b)
    assert np.array_equal(ag.qnet_target.arrays()[0], before)
    dqn_train_step(ag, b)
    assert np.array_equal(ag.qnet_target.arrays()[0], ag.qnet.arrays()[0])


def test_epsilon_schedule():
    h = DQNHyper(epsilon_start=1.0, epsilon_end=0.1, epsilon_decay_steps=100)
    assert h.epsilon(0) == 1.0 and h.epsilon(50) == pytest.approx(0.55) and h.epsilon(1000) == pytest.approx(0.1)


@pytest.fixture(scope="module")
def rw_bundle():
    return prepare_bundle(random_walk(7, 300), "ddpg", RAW_WINDOW_CONFIG, start=29)


def test_zero_episodes_keeps_init(rw_bundle):
    hyper = DDPGHyper(actor_hidden=(8,), critic_hidden=(8,))
    res = train("ddpg", rw_bundle, EnvConfig(), TrainConfig(episodes=0), hyper, seed=3)
    init = make_ddpg(rw_bundle.obs_dim + 2, hyper, 3)
    assert res.log == []
    for a, b in zip(res.agent.actor.arrays() + res.agent.critic.arrays(), init.actor.arrays() + init.critic.arrays()):
        assert np.array_equal(a, b)


@pytest.mark.parametrize("kind", ["ddpg", "dqn"])
def test_same_seed_same_log(rw_bundle, kind):
    hyper = (DDPGHyper(actor_hidden=(8,), critic_hidden=(8,), warmup_steps=50, batch_size=16) if kind == "ddpg"
             else DQNHyper(hidden=(8,), warmup_steps=50, batch_size=16))
    cfg = TrainConfig(episodes=3, episode_length=60)
    a = train(kind, rw_bundle, EnvConfig(), cfg, hyper, seed=11)
    b = train(kind, rw_bundle, EnvConfig(), cfg, hyper, seed=11)
    assert repr(a.log) == repr(b.log)  # NaN objectives compare unequal under ==
    assert all(np.isfinite(e["loss"]) for e in a.log[1:])


@pytest.mark.parametrize("kind", ["mssddpg", "dqn"])
def test_agent_checkpoint_roundtrip(tmp_path, rw_bundle, kind):
    hyper = (DQNHyper(hidden=(8,), warmup_steps=20, batch_size=8) if kind == "dqn"
             else DDPGHyper(actor_hidden=(8,), critic_hidden=(8,), warmup_steps=20, batch_size=8))
    res = train(kind, rw_bundle, EnvConfig(), TrainConfig(episodes=1, episode_length=40), hyper, seed=2)
    save_agent(tmp_path / "agent", res, "abc")
    k, agent = load_agent(tmp_path / "agent.npz")
    assert k == kind and agent.hyper == res.agent.hyper
    for name, p in res.agent.networks().items():
        q = agent.networks()[name]
        assert all(np.array_equal(x, y) for x, y in zip(p.arrays(), q.arrays()))
