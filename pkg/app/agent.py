# app/agent.py
"""
Double Deep Q-Learning on top of any QModel (HybridModel or ClassicalMLP).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from app.errors import ArgumentError, ConfigError
from app.optim import AdamState, adam_step, linear_schedule

log = logging.getLogger(__name__)


class QModel(Protocol):
    action_count: int
    params: Dict[str, np.ndarray]

    def forward(self, observation) -> np.ndarray: ...
    def forward_batch(self, observations) -> np.ndarray: ...
    def forward_trace(self, observations) -> Tuple[np.ndarray, object]: ...
    def backward_trace(self, trace, grad_q: np.ndarray) -> Dict[str, np.ndarray]: ...
    def clone(self) -> "QModel": ...


class Environment(Protocol):
    action_count: int
    observation_shape: Tuple[int, ...]

    def reset(self) -> np.ndarray: ...
    def step(self, action: int): ...


# ----------------------- Replay -----------------------

@dataclass(frozen=True)
class Transition:
    observation: np.ndarray
    action: int
    reward: float
    next_observation: np.ndarray
    terminal: bool

    def __post_init__(self):
        if isinstance(self.action, bool) or not isinstance(self.action, (int, np.integer)) or self.action < 0:
            raise ArgumentError(f"Transition action must be a non-negative int, got {self.action!r}")


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, action_count: Optional[int] = None):
        if capacity < 1:
            raise ConfigError(f"Replay capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.action_count = action_count
        self._items: List[Transition] = []
        self._head = 0  # slot of the oldest item once full

    def __len__(self) -> int:
        return len(self._items)

    @property
    def size(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if self.action_count is not None and transition.action >= self.action_count:
            raise ArgumentError(f"Action {transition.action} out of range for {self.action_count} actions")
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._head] = transition
            self._head = (self._head + 1) % self.capacity

    def contents(self) -> List[Transition]:
        """Oldest to newest."""
        return self._items[self._head:] + self._items[:self._head]

    def sample(self, batch_size: int, rng: np.random.Generator) -> List[Transition]:
        if batch_size < 1 or not self._items:
            raise ArgumentError(f"Cannot sample {batch_size} from a buffer of {len(self)}")
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]


@dataclass
class ExplorationSchedule:
    epsilon: float = 1.0
    decay: float = 0.99
    epsilon_min: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.epsilon_min <= 1.0 or not 0.0 < self.decay <= 1.0:
            raise ConfigError(f"Bad exploration schedule: decay={self.decay}, epsilon_min={self.epsilon_min}")
        self.epsilon = min(max(self.epsilon, self.epsilon_min), 1.0)

    def step(self) -> float:
        """Apply one episode of decay; returns the new epsilon."""
        self.epsilon = max(self.epsilon * self.decay, self.epsilon_min)
        return self.epsilon


# ----------------------- Policy / targets -----------------------

def select_action(model: QModel, observation, epsilon: float, rng: np.random.Generator) -> int:
    """ε-greedy; greedy ties go to the lowest action index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ArgumentError(f"epsilon must be in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return int(rng.integers(model.action_count))
    return int(np.argmax(model.forward(observation)))


def _stack(batch: Sequence[Transition]):
    obs = np.stack([np.asarray(t.observation, dtype=float) for t in batch])
    actions = np.array([t.action for t in batch], dtype=int)
    rewards = np.array([t.reward for t in batch], dtype=float)
    nxt = np.stack([np.asarray(t.next_observation, dtype=float) for t in batch])
    terminal = np.array([t.terminal for t in batch], dtype=bool)
    return obs, actions, rewards, nxt, terminal


def ddqn_target(batch: Sequence[Transition], online: QModel, target: QModel, gamma: float) -> np.ndarray:
    """y = r (terminal) or r + γ·Q_target(s', argmax_a Q_online(s', a))."""
    if len(batch) == 0:
        raise ArgumentError("ddqn_target needs a non-empty batch")
    if not 0.0 <= gamma < 1.0:
        raise ArgumentError(f"gamma must be in [0, 1), got {gamma}")
    _, _, rewards, nxt, terminal = _stack(batch)
    best = np.argmax(online.forward_batch(nxt), axis=1)
    bootstrap = target.forward_batch(nxt)[np.arange(len(batch)), best]
    return np.where(terminal, rewards, rewards + gamma * bootstrap)


# ----------------------- Agent -----------------------

@dataclass
class AgentConfig:
    gamma: float = 0.99
    batch_size: int = 32
    buffer_capacity: int = 1_000_000
    warmup: int = 500
    target_sync_every: int = 100
    learning_rate_start: float = 1e-3
    learning_rate_end: float = 1e-4
    schedule_steps: int = 10_000_000  # horizon of the learning-rate decay, in train steps


@dataclass
class EpisodeResult:
    episode_return: float
    steps: int
    epsilon: float
    losses: List[float] = field(default_factory=list)

    @property
    def mean_loss(self) -> float:
        return float(np.mean(self.losses)) if self.losses else float("nan")


class DDQNAgent:
    def __init__(self, online: QModel, config: AgentConfig, rng: np.random.Generator):
        self.online = online
        self.target = online.clone()
        self.config = config
        self.rng = rng
        self.buffer = ReplayBuffer(config.buffer_capacity, online.action_count)
        self.adam = AdamState()
        self.train_steps = 0
        self.frames = 0

    def learning_rate(self) -> float:
        fraction = self.train_steps / max(self.config.schedule_steps, 1)
        return linear_schedule(fraction, self.config.learning_rate_start, self.config.learning_rate_end)

    def sync_target(self) -> None:
        self.target = self.online.clone()

    def train_step(self, batch: Optional[Sequence[Transition]] = None) -> Optional[float]:
        """
        One minibatch update. Returns the MSE loss, or None when the buffer holds fewer than
        batch_size transitions (nothing happens).
        """
        if batch is None:
            if len(self.buffer) < self.config.batch_size:
                return None
            batch = self.buffer.sample(self.config.batch_size, self.rng)
        y = ddqn_target(batch, self.online, self.target, self.config.gamma)
        obs, actions, _, _, _ = _stack(batch)
        if actions.max() >= self.online.action_count:
            raise ArgumentError(f"Batch action {int(actions.max())} out of range for {self.online.action_count} actions")
        q, trace = self.online.forward_trace(obs)
        rows = np.arange(len(batch))
        err = q[rows, actions] - y
        loss = float(np.mean(err ** 2))

        grad_q = np.zeros_like(q)
        grad_q[rows, actions] = 2.0 * err / len(batch)
        grads = self.online.backward_trace(trace, grad_q)
        adam_step(self.online.params, grads, self.adam, self.learning_rate())

        self.train_steps += 1
        if self.train_steps % self.config.target_sync_every == 0:
            self.sync_target()
            log.debug("target network synced at train step %d", self.train_steps)
        return loss


def run_episode(env: Environment, agent: DDQNAgent, schedule: ExplorationSchedule,
                learn: bool = True) -> EpisodeResult:
    """
    Acts ε-greedily until the environment reports terminal. Every transition is pushed;
    with `learn`, one train step per env step once the buffer holds `warmup` transitions.
    ε decays once at the end of the episode.
    """
    obs = env.reset()
    total = 0.0
    steps = 0
    losses: List[float] = []
    terminal = False
    while not terminal:
        action = select_action(agent.online, obs, schedule.epsilon, agent.rng)
        result = env.step(action)
        agent.buffer.push(Transition(obs, action, result.reward, result.observation, result.terminal))
        agent.frames += 1
        total += result.reward
        steps += 1
        if learn and len(agent.buffer) >= max(agent.config.warmup, agent.config.batch_size):
            loss = agent.train_step()
            if loss is not None:
                losses.append(loss)
        obs, terminal = result.observation, result.terminal
    epsilon = schedule.epsilon
    schedule.step()
    return EpisodeResult(total, steps, epsilon, losses)


def greedy_return(env: Environment, model: QModel) -> float:
    """Undiscounted return of one greedy (ε = 0) episode, no learning."""
    obs = env.reset()
    total = 0.0
    terminal = False
    while not terminal:
        result = env.step(int(np.argmax(model.forward(obs))))
        total += result.reward
        obs, terminal = result.observation, result.terminal
    return total
