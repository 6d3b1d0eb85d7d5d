"""Deterministic actor-critic agent (DDPG) over flat state vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NotReadyError, ShapeError
from ..nn import AdamState, Batch, MLPParams, ReplayBuffer, adam_step, backward, forward, init_mlp, predict, soft_update


@dataclass(frozen=True)
class DDPGHyper:
    gamma: float = 0.99
    tau: float = 0.005
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    batch_size: int = 64
    noise_sigma: float = 0.2
    noise_min: float = 0.0
    warmup_steps: int = 1000
    replay_capacity: int = 100_000
    actor_hidden: tuple[int, ...] = (128, 64)
    critic_hidden: tuple[int, ...] = (128, 64)
    dead_zone: float = 0.1
    reward_scale: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        object.__setattr__(self, "actor_hidden", tuple(self.actor_hidden))
        object.__setattr__(self, "critic_hidden", tuple(self.critic_hidden))


@dataclass
class DDPGAgent:
    actor: MLPParams
    critic: MLPParams
    actor_target: MLPParams
    critic_target: MLPParams
    replay: ReplayBuffer
    hyper: DDPGHyper = field(default_factory=DDPGHyper)
    actor_opt: AdamState | None = None
    critic_opt: AdamState | None = None
    updates: int = 0

    def __post_init__(self) -> None:
        if self.actor_opt is None:
            self.actor_opt = AdamState.zeros_like(self.actor)
        if self.critic_opt is None:
            self.critic_opt = AdamState.zeros_like(self.critic)

    @property
    def state_dim(self) -> int:
        return self.actor.sizes[0]

    def networks(self) -> dict[str, MLPParams]:
        return {"actor": self.actor, "critic": self.critic,
                "actor_target": self.actor_target, "critic_target": self.critic_target}


def actor_shape(state_dim: int, hyper: DDPGHyper) -> list[int]:
    return [state_dim, *hyper.actor_hidden, 1]


def critic_shape(state_dim: int, hyper: DDPGHyper) -> list[int]:
    return [state_dim + 1, *hyper.critic_hidden, 1]


def make_ddpg(state_dim: int, hyper: DDPGHyper, seed: int) -> DDPGAgent:
    rng = np.random.default_rng(seed)
    a_sizes = actor_shape(state_dim, hyper)
    c_sizes = critic_shape(state_dim, hyper)
    actor = init_mlp(a_sizes, ["relu"] * len(hyper.actor_hidden) + ["tanh"], rng, final_scale=3e-3)
    critic = init_mlp(c_sizes, ["relu"] * len(hyper.critic_hidden) + ["identity"], rng, final_scale=3e-3)
    replay = ReplayBuffer(hyper.replay_capacity, state_dim, 1, seed=int(rng.integers(2**31)))
    return DDPGAgent(actor, critic, actor.copy(), critic.copy(), replay, hyper)


def ddpg_act(agent: DDPGAgent, obs: np.ndarray, explore: bool = False,
             rng: np.random.Generator | None = None, sigma: float | None = None) -> float:
    """Actor output in [-1, 1], optionally perturbed by clipped Gaussian noise."""
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (agent.state_dim,):
        raise ShapeError(f"observation {obs.shape} != ({agent.state_dim},)")
    a = float(predict(agent.actor, obs)[0])
    if explore:
        s = agent.hyper.noise_sigma if sigma is None else sigma
        a = float(np.clip(a + s * rng.standard_normal(), -1.0, 1.0))
    return a


def critic_targets(agent: DDPGAgent, batch: Batch) -> np.ndarray:
    """Bootstrapped targets; only the target networks are consulted."""
    h = agent.hyper
    a2 = predict(agent.actor_target, batch.next_states)
    q2 = predict(agent.critic_target, np.hstack([batch.next_states, a2]))[:, 0]
    return h.reward_scale * batch.rewards + h.gamma * (1.0 - batch.dones) * q2


def actor_gradients(actor: MLPParams, critic: MLPParams, states: np.ndarray) -> tuple[list[np.ndarray], float]:
    """Gradients of ``-mean Q(s, mu(s))`` w.r.t. the actor, and the mean Q itself."""
    a, a_cache = forward(actor, states)
    q, q_cache = forward(critic, np.hstack([states, a]))
    n = states.shape[0]
    _, dx = backward(critic, q_cache, np.full_like(q, -1.0 / n))
    grads, _ = backward(actor, a_cache, dx[:, -1:])
    return grads, float(q.mean())


def ddpg_train_step(agent: DDPGAgent, batch: Batch | None = None,
                    rng: np.random.Generator | None = None) -> tuple[float, float]:
    """One critic regression step, one actor ascent step, then Polyak-average the targets.

    Returns ``(critic_loss, actor_objective)`` where the objective is the mean
    critic value of the actor's actions on the batch states.
    """
    h = agent.hyper
    if batch is None:
        if len(agent.replay) < max(h.warmup_steps, h.batch_size):
            raise NotReadyError(f"{len(agent.replay)} transitions collected, need {h.warmup_steps}")
        batch = agent.replay.sample(h.batch_size, rng)
    n = batch.states.shape[0]
    y = critic_targets(agent, batch)
    q, cache = forward(agent.critic, np.hstack([batch.states, batch.actions]))
    err = q[:, 0] - y
    loss = float(np.mean(err * err))
    grads, _ = backward(agent.critic, cache, (2.0 / n) * err[:, None])
    agent.critic, agent.critic_opt = adam_step(agent.critic, grads, agent.critic_opt, h.lr_critic)

    a_grads, objective = actor_gradients(agent.actor, agent.critic, batch.states)
    agent.actor, agent.actor_opt = adam_step(agent.actor, a_grads, agent.actor_opt, h.lr_actor)

    agent.critic_target = soft_update(agent.critic_target, agent.critic, h.tau)
    agent.actor_target = soft_update(agent.actor_target, agent.actor, h.tau)
    agent.updates += 1
    return loss, objective
