"""Epsilon-greedy DQN / Double-DQN agent on top of :mod:`fdqn.nn`."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import nn
from .errors import ConfigError, ContractError, NumericError
from .replay import TransitionBatch


@dataclass
class EpsilonSchedule:
    """Exploration rate ``max(eps_min, eps_max * decay**t)``.

    ``clock`` selects what ``t`` counts: finished episodes (default) or
    environment steps.
    """

    eps_max: float = 1.0
    eps_min: float = 0.01
    decay: float = 0.995
    clock: str = "episode"

    def __post_init__(self):
        if not (0.0 <= self.eps_min <= self.eps_max <= 1.0):
            raise ConfigError(f"need 0 <= eps_min <= eps_max <= 1, got {self.eps_min}, {self.eps_max}")
        if not (0.0 < self.decay <= 1.0):
            raise ConfigError(f"decay must lie in (0, 1], got {self.decay}")
        if self.clock not in ("episode", "step"):
            raise ConfigError(f"clock must be 'episode' or 'step', got {self.clock!r}")


def epsilon_at(sched: EpsilonSchedule, t: int) -> float:
    return max(sched.eps_min, sched.eps_max * sched.decay ** t)


@dataclass
class AgentConfig:
    gamma: float = 0.99
    learning_rate: float = 1e-4
    batch_size: int = 1024
    double_dqn: bool = True
    target_sync_interval: int = 1
    learn_start: int = 1000
    updates_per_step: int = 1
    memory_size: int = 1_000_000
    grad_clip: Optional[float] = None

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("batch_size", "target_sync_interval", "updates_per_step", "memory_size"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.learn_start, int) or self.learn_start < 0:
            raise ConfigError(f"learn_start must be a non-negative integer, got {self.learn_start!r}")
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise ConfigError(f"grad_clip must be positive or null, got {self.grad_clip}")


def _explores(rng: np.random.Generator, eps: float) -> bool:
    return rng.random() < eps


def select_action(q_row, eps: float, rng: np.random.Generator) -> int:
    """Random action with probability ``eps``, else argmax (lowest index on ties)."""
    q_row = np.asarray(q_row)
    if q_row.ndim != 1 or q_row.size == 0:
        raise ContractError("q_row must be a non-empty vector")
    if _explores(rng, eps):
        return int(rng.integers(q_row.size))
    return int(np.argmax(q_row))


def td_targets(batch: TransitionBatch, online: nn.Parameters, target: nn.Parameters,
               gamma: float, double: bool) -> np.ndarray:
    """Bootstrapped regression targets; terminal transitions get ``y = r``."""
    q_next = nn.forward(target, batch.next_states)
    if double:
        chosen = np.argmax(nn.forward(online, batch.next_states), axis=1)
    else:
        chosen = np.argmax(q_next, axis=1)
    if not np.all(np.isfinite(q_next)):
        raise NumericError("non-finite target-network Q-values")
    bootstrap = q_next[np.arange(len(chosen)), chosen]
    y = batch.rewards + np.where(batch.dones, 0.0, gamma * bootstrap)
    return y.astype(q_next.dtype)


class Agent:
    """Online network, target network and Adam state for one learner."""

    def __init__(self, spec: nn.NetworkSpec, config: AgentConfig, seed: int = 0,
                 online: nn.Parameters | None = None):
        self.spec = spec
        self.config = config
        self.online = online if online is not None else nn.init_params(spec, seed)
        self.target = self.online.copy()
        self.adam = nn.AdamState.zeros(self.online)

    def q_values(self, obs) -> np.ndarray:
        return nn.forward(self.online, np.asarray(obs)[None])[0]

    def act(self, obs, eps: float, rng: np.random.Generator) -> int:
        # same draw order as select_action, but skips the forward pass when exploring
        if _explores(rng, eps):
            return int(rng.integers(self.spec.action_size))
        return int(np.argmax(self.q_values(obs)))

    def learn_step(self, batch: TransitionBatch) -> float:
        if len(batch) == 0:
            raise ContractError("empty batch")
        cfg = self.config
        y = td_targets(batch, self.online, self.target, cfg.gamma, cfg.double_dqn)
        loss, grads = nn.loss_and_grads(self.online, batch.states, batch.actions, y)
        if cfg.grad_clip is not None:
            grads = nn.clip_by_global_norm(grads, cfg.grad_clip)
        self.online, self.adam = nn.adam_step(self.online, grads, self.adam, cfg.learning_rate)
        return loss

    def sync_target(self) -> None:
        self.target = self.online.copy()


def learn_step(agent: Agent, batch: TransitionBatch) -> float:
    return agent.learn_step(batch)


def sync_target(agent: Agent) -> None:
    agent.sync_target()
