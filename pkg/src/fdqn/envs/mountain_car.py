"""Under-powered car in a valley; must build momentum to reach the flag."""

from __future__ import annotations

import math

import numpy as np

from .base import Env, EnvSpec

MIN_POSITION = -1.2
MAX_POSITION = 0.6
MAX_SPEED = 0.07
GOAL_POSITION = 0.5
FORCE = 0.001
GRAVITY = 0.0025


def mountain_car_dynamics(position: float, velocity: float, action: int):
    velocity += (action - 1) * FORCE - GRAVITY * math.cos(3 * position)
    velocity = min(max(velocity, -MAX_SPEED), MAX_SPEED)
    position = min(max(position + velocity, MIN_POSITION), MAX_POSITION)
    if position == MIN_POSITION and velocity < 0:
        velocity = 0.0
    return position, velocity


class MountainCar(Env):
    """Actions: 0 push left, 1 coast, 2 push right. Reward -1 per step."""

    spec = EnvSpec("mountaincar", action_size=3, observation_shape=(2,), max_episode_steps=200)

    def __init__(self, max_episode_steps: int = 200):
        super().__init__()
        if max_episode_steps != 200:
            self.spec = EnvSpec("mountaincar", 3, (2,), max_episode_steps)
        self.position = -0.5
        self.velocity = 0.0

    def _obs(self):
        return np.array([self.position, self.velocity], dtype=np.float32)

    def _reset(self, rng):
        self.position = float(rng.uniform(-0.6, -0.4))
        self.velocity = 0.0
        return self._obs()

    def _step(self, action):
        self.position, self.velocity = mountain_car_dynamics(self.position, self.velocity, action)
        return self._obs(), -1.0, self.position >= GOAL_POSITION

    def render(self):
        img = np.zeros((96, 96), dtype=np.uint8)
        for col in range(96):
            p = MIN_POSITION + col / 95 * (MAX_POSITION - MIN_POSITION)
            img[int(round(80 - 30 * math.sin(3 * p))), col] = 128
        col = int(round((self.position - MIN_POSITION) / (MAX_POSITION - MIN_POSITION) * 95))
        row = int(round(80 - 30 * math.sin(3 * self.position)))
        img[max(row - 4, 0):row, max(col - 2, 0):col + 3] = 255
        return img
