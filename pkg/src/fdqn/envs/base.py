"""Common environment types."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, UsageError


@dataclass(frozen=True)
class EnvSpec:
    name: str
    action_size: int
    observation_shape: tuple[int, ...]
    max_episode_steps: int


@dataclass(frozen=True)
class StepResult:
    """Outcome of one step.

    ``done`` ends the episode. ``truncated`` marks the subset of endings
    caused by the step cap rather than by a terminal state; learners should
    still bootstrap through those.
    """

    observation: np.ndarray
    reward: float
    done: bool
    truncated: bool = False

    @property
    def terminal(self) -> bool:
        return self.done and not self.truncated


class Env:
    """Episode bookkeeping shared by every environment.

    Subclasses implement ``_reset(rng)`` and ``_step(action)``, the latter
    returning ``(observation, reward, terminal)``.
    """

    spec: EnvSpec

    def __init__(self):
        self.steps = 0
        self._done = True
        self.rng = np.random.default_rng(0)

    @property
    def action_size(self) -> int:
        return self.spec.action_size

    @property
    def observation_shape(self) -> tuple[int, ...]:
        return self.spec.observation_shape

    def reset(self, seed: int) -> np.ndarray:
        self.rng = np.random.default_rng(seed)
        self.steps = 0
        self._done = False
        return self._reset(self.rng)

    def step(self, action: int) -> StepResult:
        if self._done:
            raise UsageError("step() called on a finished episode; call reset() first")
        if not (0 <= int(action) < self.spec.action_size) or int(action) != action:
            raise ContractError(f"action {action!r} outside [0, {self.spec.action_size})")
        obs, reward, terminal = self._step(int(action))
        self.steps += 1
        truncated = not terminal and self.steps >= self.spec.max_episode_steps
        self._done = terminal or truncated
        return StepResult(obs, float(reward), self._done, truncated)

    def render(self) -> np.ndarray:
        """8-bit grayscale image of the current state."""
        raise NotImplementedError(f"{self.spec.name} has no frame renderer")

    def _reset(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def _step(self, action: int):
        raise NotImplementedError


class ScaleObservation:
    """Affine observation rescaling, ``(obs - offset) * scale``."""

    def __init__(self, env: Env, offset, scale):
        self.env = env
        self.spec = env.spec
        self.offset = np.asarray(offset, dtype=np.float32)
        self.scale = np.asarray(scale, dtype=np.float32)

    def __getattr__(self, name):
        return getattr(self.env, name)

    def _apply(self, obs):
        return ((obs - self.offset) * self.scale).astype(np.float32)

    def reset(self, seed: int) -> np.ndarray:
        return self._apply(self.env.reset(seed))

    def step(self, action: int) -> StepResult:
        res = self.env.step(action)
        return StepResult(self._apply(res.observation), res.reward, res.done, res.truncated)
