"""
agent/dqn.py

Deep Q-learning with experience replay, a periodically synced target network,
masked epsilon-greedy exploration and SGD with momentum.

TD target: y = r + gamma * max over valid a' of Q_target(s', a'), and y = r on
terminal transitions. Loss is the batch mean of (Q(s, a) - y)^2.
"""

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import TrainConfig
from errors import Divergence, NonFiniteOutput
from agent.qnetwork import QNetwork, default_layer_sizes, q_values
from agent.replay_buffer import ReplayBuffer, TransitionBatch
from scenario import Scenario
from simsignal import (
    ACTIONS,
    NUM_ACTIONS,
    OBSERVATION_WIDTH,
    Action,
    IntersectionSimulator,
    Observation,
    encode_observation,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Action selection
# ---------------------------------------------------------------------------

def action_mask(valid: FrozenSet[Action]) -> np.ndarray:
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    for action in valid:
        mask[action.index] = True
    return mask


def masked_argmax(values: np.ndarray, mask: np.ndarray) -> int:
    """Index of the largest value among mask==True entries; lowest index on ties."""
    return int(np.argmax(np.where(mask, values, -np.inf)))


def select_action(
    net: QNetwork,
    obs: Observation,
    valid: FrozenSet[Action],
    epsilon: float,
    rng: Optional[np.random.Generator],
    elapsed_clip_s: float = 120.0,
) -> Action:
    """
    With probability epsilon a uniform valid action, otherwise the valid
    action with the highest Q value. `rng` may be None when epsilon is 0.
    """
    if not valid:
        raise ValueError("select_action() needs at least one valid action")
    if len(valid) == 1:
        return next(iter(valid))
    if epsilon > 0.0 and rng.random() < epsilon:
        choices = sorted(valid)
        return choices[int(rng.integers(len(choices)))]
    values = q_values(net, obs, elapsed_clip_s)
    return ACTIONS[masked_argmax(values, action_mask(valid))]


def epsilon_at(step: int, cfg: TrainConfig) -> float:
    """Linear decay from epsilon_start to epsilon_end over epsilon_decay_steps."""
    frac = min(1.0, step / cfg.epsilon_decay_steps)
    return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start)


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------

def td_targets(batch: TransitionBatch, target_net: QNetwork, gamma: float) -> np.ndarray:
    q_next = target_net.predict(batch.next_states)
    best = np.where(batch.next_masks, q_next, -np.inf).max(axis=1)
    best = np.where(batch.next_masks.any(axis=1), best, 0.0)
    return np.where(batch.dones, batch.rewards, batch.rewards + gamma * np.where(batch.dones, 0.0, best))


def td_loss_and_gradients(
    batch: TransitionBatch,
    net: QNetwork,
    target_net: QNetwork,
    gamma: float,
) -> Tuple[float, List[np.ndarray]]:
    """Mean squared TD error and its gradient w.r.t. net.parameters()."""
    if len(batch) == 0:
        raise ValueError("td_loss() needs a non-empty batch")
    y = td_targets(batch, target_net, gamma)
    q, activations = net.forward(batch.states)
    rows = np.arange(len(batch))
    err = q[rows, batch.actions] - y
    loss = float(np.mean(err ** 2))

    grad_out = np.zeros_like(q)
    grad_out[rows, batch.actions] = 2.0 * err / len(batch)
    return loss, net.backward(activations, grad_out)


def td_loss(batch: TransitionBatch, net: QNetwork, target_net: QNetwork, gamma: float) -> float:
    loss, _ = td_loss_and_gradients(batch, net, target_net, gamma)
    return loss


class SgdMomentum:
    """Heavy-ball SGD with global gradient-norm clipping."""

    def __init__(self, net: QNetwork, learning_rate: float, momentum: float, max_grad_norm: float):
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.max_grad_norm = max_grad_norm
        self.velocity = [np.zeros_like(p) for p in net.parameters()]

    def step(self, net: QNetwork, grads: Sequence[np.ndarray]) -> float:
        norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
        scale = self.max_grad_norm / norm if norm > self.max_grad_norm else 1.0
        for param, grad, vel in zip(net.parameters(), grads, self.velocity):
            vel *= self.momentum
            vel -= self.learning_rate * scale * grad
            param += vel
        return norm


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class EpisodeStats:
    episode: int
    scenario_label: str
    steps: int
    reward: float
    throughput: float
    epsilon: float
    mean_loss: float
    greedy_throughput: float = float("nan")


@dataclass
class TrainingResult:
    network: QNetwork
    curve: List[EpisodeStats] = field(default_factory=list)
    env_steps: int = 0
    # episode whose greedy network was kept; None keeps the final network
    best_episode: Optional[int] = None


def greedy_rollout(
    net: QNetwork,
    env: IntersectionSimulator,
    scenario: Scenario,
    seed: int = 0,
) -> Tuple[float, int]:
    """Run one epsilon = 0 episode; returns (normalized throughput, steps)."""
    clip = env.config.elapsed_clip_s
    obs = env.reset(scenario, seed=seed)
    done = False
    steps = 0
    info = env.snapshot()
    while not done:
        action = select_action(net, obs, env.valid_actions(), 0.0, None, clip)
        obs, _, done, info = env.step(action)
        steps += 1
    return (info.crossed / info.generated if info.generated else 1.0), steps


def train(
    env_factory: Optional[Callable[[], IntersectionSimulator]],
    scenarios: Sequence[Scenario],
    cfg: Optional[TrainConfig] = None,
) -> TrainingResult:
    """
    Train a Q-network by cycling through `scenarios` until cfg.total_env_steps
    simulator seconds have been spent. An episode cut short by the budget is
    still recorded in the curve.

    Every `greedy_eval_interval` episodes past `learning_starts` the current
    network runs one greedy episode on the first scenario; the network with
    the best (throughput, fewest steps) is returned, later episodes winning
    ties. Greedy episodes do not count against the step budget.

    Raises
    ------
    Divergence
        If the TD loss or a Q value becomes non-finite.
    """
    cfg = cfg or TrainConfig()
    if not scenarios:
        raise ValueError("train() needs at least one training scenario")
    env = env_factory() if env_factory else IntersectionSimulator()
    eval_env = env_factory() if env_factory else IntersectionSimulator(env.config)
    clip = env.config.elapsed_clip_s

    net = QNetwork(default_layer_sizes(cfg.hidden_sizes), seed=cfg.seed)
    result = TrainingResult(network=net)
    if cfg.total_env_steps == 0:
        return result

    target = net.copy()
    buffer = ReplayBuffer(min(cfg.buffer_capacity, cfg.total_env_steps), OBSERVATION_WIDTH)
    optimizer = SgdMomentum(net, cfg.learning_rate, cfg.momentum, cfg.max_grad_norm)
    rng = np.random.default_rng(cfg.seed)
    all_valid = np.ones(NUM_ACTIONS, dtype=bool)
    best_net: Optional[QNetwork] = None
    best_score: Tuple[float, int] = (-1.0, 0)

    logger.info(
        f"Training started: {cfg.total_env_steps} env steps over {len(scenarios)} scenarios, "
        f"layers {net.layer_sizes}, seed {cfg.seed}"
    )

    step = 0
    episode = 0
    while step < cfg.total_env_steps:
        scenario = scenarios[episode % len(scenarios)]
        obs = env.reset(scenario, seed=cfg.seed + episode)
        state = encode_observation(obs, clip)
        episode_reward = 0.0
        episode_steps = 0
        losses: List[float] = []
        done = False
        info = env.snapshot()

        while not done and step < cfg.total_env_steps:
            epsilon = epsilon_at(step, cfg)
            try:
                action = select_action(net, obs, env.valid_actions(), epsilon, rng, clip)
            except NonFiniteOutput as e:
                raise Divergence(f"Q values diverged at env step {step}: {e}") from e

            obs, reward, done, info = env.step(action)
            next_state = encode_observation(obs, clip)
            next_mask = all_valid if done else action_mask(env.valid_actions())
            buffer.add(state, action.index, reward, next_state, done, next_mask)
            state = next_state
            episode_reward += reward
            episode_steps += 1
            step += 1

            if step >= cfg.learning_starts and len(buffer) >= cfg.batch_size:
                batch = buffer.sample(cfg.batch_size, rng)
                loss, grads = td_loss_and_gradients(batch, net, target, cfg.gamma)
                if not np.isfinite(loss):
                    raise Divergence(f"TD loss became non-finite at env step {step}")
                optimizer.step(net, grads)
                losses.append(loss)

            if step % cfg.target_sync_interval == 0:
                target = net.copy()

        stats = EpisodeStats(
            episode=episode,
            scenario_label=scenario.label,
            steps=episode_steps,
            reward=episode_reward,
            throughput=info.crossed / info.generated if info.generated else 0.0,
            epsilon=epsilon_at(step, cfg),
            mean_loss=float(np.mean(losses)) if losses else float("nan"),
        )
        if cfg.greedy_eval_interval and step >= cfg.learning_starts and episode % cfg.greedy_eval_interval == 0:
            greedy_throughput, greedy_steps = greedy_rollout(net, eval_env, scenarios[0], seed=cfg.seed)
            stats.greedy_throughput = greedy_throughput
            if (greedy_throughput, -greedy_steps) >= best_score:
                best_score = (greedy_throughput, -greedy_steps)
                best_net = net.copy()
                result.best_episode = episode
        result.curve.append(stats)
        logger.info(
            f"Episode {episode} on '{scenario.label}': reward={stats.reward:.0f}, "
            f"throughput={stats.throughput:.3f}, eps={stats.epsilon:.3f}, loss={stats.mean_loss:.4f}, "
            f"greedy={stats.greedy_throughput:.3f}"
        )
        episode += 1

    result.env_steps = step
    if best_net is not None:
        result.network = best_net
        logger.info(
            f"Keeping the greedy network from episode {result.best_episode} "
            f"(throughput {best_score[0]:.3f}, {-best_score[1]} steps)"
        )
    logger.info(f"Training finished after {episode} episodes ({step} env steps)")
    return result


TRAINING_CURVE_HEADER = ("episode", "scenario_label", "steps", "reward", "throughput", "epsilon", "mean_loss",
                         "greedy_throughput")


def write_training_curve(curve: Sequence[EpisodeStats], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=TRAINING_CURVE_HEADER, lineterminator="\n")
        writer.writeheader()
        for stats in curve:
            row = asdict(stats)
            for key in ("reward", "throughput", "epsilon", "mean_loss", "greedy_throughput"):
                row[key] = f"{row[key]:.6f}"
            writer.writerow(row)
    return path
