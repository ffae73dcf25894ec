"""Cart-pole balancing with the classic benchmark constants."""

from __future__ import annotations

import math

import numpy as np

from .base import Env, EnvSpec

GRAVITY = 9.8
MASS_CART = 1.0
MASS_POLE = 0.1
TOTAL_MASS = MASS_CART + MASS_POLE
HALF_LENGTH = 0.5
POLE_MOMENT = MASS_POLE * HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
THETA_LIMIT = 12 * 2 * math.pi / 360
X_LIMIT = 2.4


def cartpole_dynamics(state, force: float):
    """One explicit Euler step of the cart-pole ODE."""
    x, x_dot, theta, theta_dot = state
    cos, sin = math.cos(theta), math.sin(theta)
    temp = (force + POLE_MOMENT * theta_dot ** 2 * sin) / TOTAL_MASS
    theta_acc = (GRAVITY * sin - cos * temp) / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos ** 2 / TOTAL_MASS))
    x_acc = temp - POLE_MOMENT * theta_acc * cos / TOTAL_MASS
    return (
        x + TAU * x_dot,
        x_dot + TAU * x_acc,
        theta + TAU * theta_dot,
        theta_dot + TAU * theta_acc,
    )


class CartPole(Env):
    """Actions: 0 push left, 1 push right. +1 reward per step, terminal step included."""

    spec = EnvSpec("cartpole", action_size=2, observation_shape=(4,), max_episode_steps=200)

    def __init__(self, max_episode_steps: int = 200):
        super().__init__()
        if max_episode_steps != 200:
            self.spec = EnvSpec("cartpole", 2, (4,), max_episode_steps)
        self.state = (0.0, 0.0, 0.0, 0.0)

    def _obs(self):
        return np.array(self.state, dtype=np.float32)

    def _reset(self, rng):
        self.state = tuple(float(v) for v in rng.uniform(-0.05, 0.05, size=4))
        return self._obs()

    def _step(self, action):
        force = FORCE_MAG if action == 1 else -FORCE_MAG
        self.state = cartpole_dynamics(self.state, force)
        x, _, theta, _ = self.state
        terminal = x < -X_LIMIT or x > X_LIMIT or theta < -THETA_LIMIT or theta > THETA_LIMIT
        return self._obs(), 1.0, terminal

    def render(self):
        img = np.zeros((96, 96), dtype=np.uint8)
        x, _, theta, _ = self.state
        cx = int(round(48 + x / X_LIMIT * 40))
        img[70, :] = 128
        img[64:70, max(cx - 6, 0):min(cx + 6, 96)] = 255
        for r in range(40):
            px = int(round(cx + r * math.sin(theta)))
            py = int(round(64 - r * math.cos(theta)))
            if 0 <= px < 96 and 0 <= py < 96:
                img[py, px] = 255
        return img
