"""Training loops, greedy evaluation and agent checkpoints."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Protocol, Union

import numpy as np

from ..env import DISCRETE_ACTIONS, Action, EnvConfig, MarketBundle, TradingEnv, encode_action
from ..errors import CheckpointError, ConfigError
from ..features import RAW_WINDOW_CONFIG, ObservationBuilder, PipelineConfig
from ..market_data import BarSeries
from ..metrics import EquityCurve
from ..nn import load_checkpoint, save_checkpoint
from .ddpg import DDPGAgent, DDPGHyper, ddpg_act, ddpg_train_step, make_ddpg
from .dqn import DQNAgent, DQNHyper, dqn_act, dqn_train_step, make_dqn

log = logging.getLogger(__name__)

LEARNED_KINDS = ("mssddpg", "ddpg", "dqn")
Agent = Union[DDPGAgent, DQNAgent]


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 30
    episode_length: int = 252


def observation_config(kind: str, pipeline: PipelineConfig) -> PipelineConfig:
    """MSSDDPG sees the multi-scale matrix; the DDPG and DQN baselines see the raw 30-bar window."""
    if kind == "mssddpg":
        return pipeline
    return replace(RAW_WINDOW_CONFIG, normalization=pipeline.normalization)


def prepare_bundle(series: BarSeries, kind: str, pipeline: PipelineConfig = PipelineConfig(),
                   start: int = 0, stop: int | None = None) -> MarketBundle:
    obs = ObservationBuilder(series, observation_config(kind, pipeline)).matrix()
    return MarketBundle(series.close, obs, series.timestamp, start, len(series) if stop is None else stop)


def default_hyper(kind: str, overrides: dict[str, Any] | None = None) -> DDPGHyper | DQNHyper:
    overrides = dict(overrides or {})
    if kind in ("ddpg", "mssddpg"):
        return DDPGHyper(**overrides)
    if kind == "dqn":
        return DQNHyper(**overrides)
    raise ConfigError(f"unknown learned agent kind {kind!r}")


@dataclass
class TrainResult:
    kind: str
    agent: Agent
    log: list[dict[str, float]] = field(default_factory=list)
    seed: int = 0


def train(kind: str, bundle: MarketBundle, env_cfg: EnvConfig = EnvConfig(), train_cfg: TrainConfig = TrainConfig(),
          hyper: DDPGHyper | DQNHyper | None = None, seed: int = 0) -> TrainResult:
    """Train a learned agent on random contiguous windows of ``bundle``'s span.

    Exploration: DDPG-family agents act uniformly at random during warm-up
    and then add Gaussian noise whose scale anneals linearly from
    ``noise_sigma`` to ``noise_min``; DQN follows its epsilon schedule.
    Window ends are time limits, not terminal states, so they are stored
    with ``done = 0``.
    """
    if kind not in LEARNED_KINDS:
        raise ConfigError(f"unknown learned agent kind {kind!r}")
    hyper = hyper if hyper is not None else default_hyper(kind)
    rng = np.random.default_rng(seed)
    ep_len = min(train_cfg.episode_length, bundle.stop - bundle.start - 1)
    env = TradingEnv(bundle, replace(env_cfg, episode_length=ep_len))
    is_ddpg = kind != "dqn"
    agent: Agent = make_ddpg(env.state_dim, hyper, seed) if is_ddpg else make_dqn(
        env.state_dim, len(DISCRETE_ACTIONS), hyper, seed)
    total = max(train_cfg.episodes * ep_len, 1)
    step = 0
    history = []
    ready = max(hyper.warmup_steps, hyper.batch_size)
    for ep in range(train_cfg.episodes):
        env.reset(rng)
        s = env.state_vector()
        t0 = env.state.t
        losses, objectives = [], []
        growth = 1.0
        while not env.done:
            if is_ddpg:
                if step < hyper.warmup_steps:
                    raw = float(rng.uniform(-1.0, 1.0))
                else:
                    sigma = hyper.noise_sigma + (hyper.noise_min - hyper.noise_sigma) * step / total
                    raw = ddpg_act(agent, s, explore=True, rng=rng, sigma=sigma)
                action = encode_action(raw, hyper.dead_zone)
                stored = raw
            else:
                idx = dqn_act(agent, s, hyper.epsilon(step), rng)
                action = DISCRETE_ACTIONS[idx]
                stored = idx
            _, reward, _ = env.step(action)
            s2 = env.state_vector()
            agent.replay.add(s, (stored,), reward, s2, False)
            growth *= 1.0 + reward
            if len(agent.replay) >= ready:
                if is_ddpg:
                    loss, obj = ddpg_train_step(agent, rng=rng)
                    objectives.append(obj)
                else:
                    loss = dqn_train_step(agent, rng=rng)
                losses.append(loss)
            s = s2
            step += 1
        entry = {
            "episode": ep,
            "start": t0,
            "return": growth - 1.0,
            "loss": float(np.mean(losses)) if losses else float("nan"),
            "objective": float(np.mean(objectives)) if objectives else float("nan"),
            "steps": step,
        }
        history.append(entry)
        log.debug("%s seed=%d ep=%d return=%.4f loss=%.3g", kind, seed, ep, entry["return"], entry["loss"])
    return TrainResult(kind, agent, history, seed)


class Policy(Protocol):
    name: str

    def reset(self, env: TradingEnv) -> None: ...

    def act(self, env: TradingEnv) -> Action: ...


class DDPGPolicy:
    def __init__(self, agent: DDPGAgent, name: str = "DDPG") -> None:
        self.agent = agent
        self.name = name

    def reset(self, env: TradingEnv) -> None:
        pass

    def act(self, env: TradingEnv) -> Action:
        return encode_action(ddpg_act(self.agent, env.state_vector()), self.agent.hyper.dead_zone)


class DQNPolicy:
    def __init__(self, agent: DQNAgent, name: str = "DQN") -> None:
        self.agent = agent
        self.name = name

    def reset(self, env: TradingEnv) -> None:
        pass

    def act(self, env: TradingEnv) -> Action:
        return DISCRETE_ACTIONS[dqn_act(self.agent, env.state_vector())]


DISPLAY_NAMES = {"mssddpg": "MSSDDPG", "ddpg": "DDPG", "dqn": "DQN"}


def policy_for(kind: str, agent: Agent) -> Policy:
    if kind == "dqn":
        return DQNPolicy(agent, DISPLAY_NAMES[kind])
    return DDPGPolicy(agent, DISPLAY_NAMES[kind])


def evaluate(policy: Policy, bundle: MarketBundle, env_cfg: EnvConfig = EnvConfig()) -> EquityCurve:
    """Greedy rollout over the whole span; one equity point per bar close."""
    env = TradingEnv(bundle, replace(env_cfg, episode_length=None))
    state = env.reset()
    policy.reset(env)
    values = [state.portfolio.value(env.price())]
    while not env.done:
        state, _, _ = env.step(policy.act(env))
        values.append(state.portfolio.value(env.price()))
    return EquityCurve(bundle.timestamps[bundle.start:bundle.stop], np.array(values))


def save_agent(path: str | Path, result: TrainResult, config_hash: str = "") -> Path:
    """Write ``<path>.npz`` parameters and a ``<path>.json`` manifest."""
    path = Path(path)
    agent = result.agent
    meta = {"kind": result.kind, "seed": str(result.seed), "config_hash": config_hash}
    save_checkpoint(path.with_suffix(".npz"), agent.networks(), meta)
    manifest = {
        "kind": result.kind,
        "seed": result.seed,
        "config_hash": config_hash,
        "hyper": asdict(agent.hyper),
        "state_dim": agent.state_dim,
    }
    path.with_suffix(".json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path.with_suffix(".npz")


def load_agent(path: str | Path) -> tuple[str, Agent]:
    path = Path(path)
    man_path = path.with_suffix(".json")
    if not path.with_suffix(".npz").exists() or not man_path.exists():
        raise CheckpointError(f"checkpoint {path} not found")
    manifest = json.loads(man_path.read_text())
    nets, _ = load_checkpoint(path.with_suffix(".npz"))
    kind = manifest["kind"]
    hyper = default_hyper(kind, manifest["hyper"])
    if kind == "dqn":
        agent = make_dqn(manifest["state_dim"], len(DISCRETE_ACTIONS), replace(hyper, replay_capacity=1), 0)
        agent.qnet, agent.qnet_target = nets["qnet"], nets["qnet_target"]
    else:
        agent = make_ddpg(manifest["state_dim"], replace(hyper, replay_capacity=1), 0)
        agent.actor, agent.critic = nets["actor"], nets["critic"]
        agent.actor_target, agent.critic_target = nets["actor_target"], nets["critic_target"]
    agent.hyper = hyper
    return kind, agent
