from .baselines import BuyAndHoldPolicy, TurtlePolicy, buy_and_hold_decide, turtle_decide, turtle_signals
from .ddpg import DDPGAgent, DDPGHyper, actor_gradients, critic_targets, ddpg_act, ddpg_train_step, make_ddpg
from .dqn import DQNAgent, DQNHyper, dqn_act, dqn_targets, dqn_train_step, make_dqn
from .training import (
    LEARNED_KINDS,
    DDPGPolicy,
    DQNPolicy,
    TrainConfig,
    TrainResult,
    evaluate,
    load_agent,
    policy_for,
    prepare_bundle,
    save_agent,
    train,
)

__all__ = [
    "BuyAndHoldPolicy", "TurtlePolicy", "buy_and_hold_decide", "turtle_decide", "turtle_signals",
    "DDPGAgent", "DDPGHyper", "actor_gradients", "critic_targets", "ddpg_act", "ddpg_train_step", "make_ddpg",
    "DQNAgent", "DQNHyper", "dqn_act", "dqn_targets", "dqn_train_step", "make_dqn",
    "LEARNED_KINDS", "DDPGPolicy", "DQNPolicy", "TrainConfig", "TrainResult", "evaluate", "load_agent",
    "policy_for", "prepare_bundle", "save_agent", "train",
]
