"""Five-state deterministic chain, small enough to solve exactly."""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec

LEFT, RIGHT = 0, 1


class Chain(Env):
    """States 0..n-1 observed one-hot; the rightmost state is the goal.

    Moving right from state n-2 enters the goal: reward 1, episode ends.
    Every other move pays 0; moving left from state 0 stays put. Start
    states are uniform over the non-goal states.
    """

    def __init__(self, n_states: int = 5, max_episode_steps: int = 20):
        super().__init__()
        self.n_states = n_states
        self.spec = EnvSpec("chain", 2, (n_states,), max_episode_steps)
        self.state = 0

    def _obs(self):
        obs = np.zeros(self.n_states, dtype=np.float32)
        obs[self.state] = 1.0
        return obs

    def _reset(self, rng):
        self.state = int(rng.integers(self.n_states - 1))
        return self._obs()

    def _step(self, action):
        self.state, reward, goal = self.transition(self.state, action)
        return self._obs(), reward, goal

    def transition(self, state: int, action: int) -> tuple[int, float, bool]:
        """Deterministic model ``(next_state, reward, terminal)``."""
        s = state + 1 if action == RIGHT else max(state - 1, 0)
        goal = s == self.n_states - 1
        return s, 1.0 if goal else 0.0, goal
