"""Value-based signal control: numpy DQN plus fixed-time and random baselines."""

from agent.qnetwork import QNetwork, build_network, default_layer_sizes, q_values
from agent.replay_buffer import ReplayBuffer, TransitionBatch
from agent.dqn import (
    EpisodeStats,
    SgdMomentum,
    TrainingResult,
    action_mask,
    epsilon_at,
    greedy_rollout,
    masked_argmax,
    select_action,
    td_loss,
    td_loss_and_gradients,
    td_targets,
    train,
    write_training_curve,
)
from agent.baselines import POLICY_NAMES, FixedTimePolicy, GreedyQPolicy, PlanEntry, RandomPolicy
from agent.checkpoint import Checkpoint, config_hash, load_checkpoint, save_checkpoint

__all__ = [
    "QNetwork",
    "build_network",
    "default_layer_sizes",
    "q_values",
    "ReplayBuffer",
    "TransitionBatch",
    "EpisodeStats",
    "SgdMomentum",
    "TrainingResult",
    "action_mask",
    "epsilon_at",
    "greedy_rollout",
    "masked_argmax",
    "select_action",
    "td_loss",
    "td_loss_and_gradients",
    "td_targets",
    "train",
    "write_training_curve",
    "POLICY_NAMES",
    "FixedTimePolicy",
    "GreedyQPolicy",
    "PlanEntry",
    "RandomPolicy",
    "Checkpoint",
    "config_hash",
    "load_checkpoint",
    "save_checkpoint",
]
