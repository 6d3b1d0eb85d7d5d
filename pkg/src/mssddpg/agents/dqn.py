"""Deep Q-learning over a discrete action set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NotReadyError
from ..nn import AdamState, Batch, MLPParams, ReplayBuffer, adam_step, backward, forward, init_mlp, predict


@dataclass(frozen=True)
class DQNHyper:
    gamma: float = 0.99
    lr: float = 1e-3
    batch_size: int = 64
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    target_sync_period: int = 500
    warmup_steps: int = 1000
    replay_capacity: int = 100_000
    hidden: tuple[int, ...] = (128, 64)
    reward_scale: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        for e in (self.epsilon_start, self.epsilon_end):
            if not 0.0 <= e <= 1.0:
                raise ValueError("epsilon must lie in [0, 1]")
        object.__setattr__(self, "hidden", tuple(self.hidden))

    def epsilon(self, step: int) -> float:
        frac = min(step / max(self.epsilon_decay_steps, 1), 1.0)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


@dataclass
class DQNAgent:
    qnet: MLPParams
    qnet_target: MLPParams
    replay: ReplayBuffer
    n_actions: int
    hyper: DQNHyper = field(default_factory=DQNHyper)
    opt: AdamState | None = None
    updates: int = 0

    def __post_init__(self) -> None:
        if self.opt is None:
            self.opt = AdamState.zeros_like(self.qnet)

    @property
    def state_dim(self) -> int:
        return self.qnet.sizes[0]

    def networks(self) -> dict[str, MLPParams]:
        return {"qnet": self.qnet, "qnet_target": self.qnet_target}


def qnet_shape(state_dim: int, n_actions: int, hyper: DQNHyper) -> list[int]:
    return [state_dim, *hyper.hidden, n_actions]


def make_dqn(state_dim: int, n_actions: int, hyper: DQNHyper, seed: int) -> DQNAgent:
    rng = np.random.default_rng(seed)
    sizes = qnet_shape(state_dim, n_actions, hyper)
    q = init_mlp(sizes, ["relu"] * len(hyper.hidden) + ["identity"], rng)
    replay = ReplayBuffer(hyper.replay_capacity, state_dim, 1, seed=int(rng.integers(2**31)))
    return DQNAgent(q, q.copy(), replay, n_actions, hyper)


def dqn_act(agent: DQNAgent, state: np.ndarray, epsilon: float = 0.0,
            rng: np.random.Generator | None = None) -> int:
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(agent.n_actions))
    return int(np.argmax(predict(agent.qnet, state)))


def dqn_targets(agent: DQNAgent, batch: Batch) -> np.ndarray:
    h = agent.hyper
    q2 = predict(agent.qnet_target, batch.next_states).max(axis=1)
    return h.reward_scale * batch.rewards + h.gamma * (1.0 - batch.dones) * q2


def dqn_train_step(agent: DQNAgent, batch: Batch | None = None,
                   rng: np.random.Generator | None = None) -> float:
    """Squared TD-error step on the taken actions; hard target sync every ``target_sync_period`` updates."""
    h = agent.hyper
    if batch is None:
        if len(agent.replay) < max(h.warmup_steps, h.batch_size):
            raise NotReadyError(f"{len(agent.replay)} transitions collected, need {h.warmup_steps}")
        batch = agent.replay.sample(h.batch_size, rng)
    n = batch.states.shape[0]
    y = dqn_targets(agent, batch)
    q, cache = forward(agent.qnet, batch.states)
    idx = batch.actions[:, 0].astype(np.int64)
    err = q[np.arange(n), idx] - y
    upstream = np.zeros_like(q)
    upstream[np.arange(n), idx] = (2.0 / n) * err
    grads, _ = backward(agent.qnet, cache, upstream)
    agent.qnet, agent.opt = adam_step(agent.qnet, grads, agent.opt, h.lr)
    agent.updates += 1
    if agent.updates % h.target_sync_period == 0:
        agent.qnet_target = agent.qnet.copy()
    return float(np.mean(err * err))
