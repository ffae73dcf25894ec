"""Side-scrolling runner: a pixel stand-in for the browser dinosaur game.

The dino sits at a fixed column and can jump over obstacles that scroll in
from the right. Observations are stacks of downsampled grayscale frames.
"""

from __future__ import annotations

import math

import numpy as np

from .base import Env, EnvSpec
from .frames import FrameStack, preprocess_frame

FRAME_SIZE = 96
GROUND_ROW = 84
DINO_X = 12
DINO_WIDTH = 8
DINO_HEIGHT = 12
JUMP_VELOCITY = 7
JUMP_GRAVITY = 1
START_SPEED = 2.0
SPEED_GAIN = 0.001
MIN_GAP = 24
GAP_SPREAD = 48

RUN, JUMP = 0, 1


class DinoRunner(Env):
    """Actions: 0 run, 1 jump (ignored while airborne). +1 per survived step.

    Obstacle gaps are at least ``MIN_GAP`` px and grow with speed so that
    a jump always fits between two obstacles.
    """

    def __init__(self, stack: int = 4, out_size: int = 48, max_episode_steps: int = 100_000):
        super().__init__()
        self.out_size = out_size
        self.spec = EnvSpec("dino", 2, (stack, out_size, out_size), max_episode_steps)
        self.frames = FrameStack(stack)
        self.height = 0
        self.vy = 0
        self.speed = START_SPEED
        self.obstacles: list[list[float]] = []
        self.to_next_spawn = 0.0

    @property
    def airborne(self) -> bool:
        return self.height > 0 or self.vy > 0

    def _gap(self, rng) -> float:
        airtime = 2 * JUMP_VELOCITY + 1
        floor = max(MIN_GAP, math.ceil(self.speed * (airtime + 3)))
        return float(rng.integers(floor, floor + GAP_SPREAD))

    def _reset(self, rng):
        self.height = 0
        self.vy = 0
        self.speed = START_SPEED
        self.obstacles = []
        self.to_next_spawn = float(rng.integers(20, 60))
        return self.frames.reset(self._frame())

    def _collides(self) -> bool:
        for x, w, h in self.obstacles:
            if x < DINO_X + DINO_WIDTH and x + w > DINO_X and self.height < h:
                return True
        return False

    def _step(self, action):
        if action == JUMP and not self.airborne:
            self.vy = JUMP_VELOCITY
        if self.airborne:
            self.height += self.vy
            self.vy -= JUMP_GRAVITY
            if self.height <= 0:
                self.height, self.vy = 0, 0

        for ob in self.obstacles:
            ob[0] -= self.speed
        self.obstacles = [ob for ob in self.obstacles if ob[0] + ob[1] > 0]
        self.to_next_spawn -= self.speed
        if self.to_next_spawn <= 0:
            width = int(self.rng.integers(3, 7))
            height = int(self.rng.integers(8, 15))
            self.obstacles.append([float(FRAME_SIZE), width, height])
            self.to_next_spawn = width + self._gap(self.rng)
        self.speed += SPEED_GAIN

        crashed = self._collides()
        obs = self.frames.push(self._frame())
        return obs, 0.0 if crashed else 1.0, crashed

    def render(self) -> np.ndarray:
        img = np.zeros((FRAME_SIZE, FRAME_SIZE), dtype=np.uint8)
        img[GROUND_ROW, :] = 255
        bottom = GROUND_ROW - self.height
        img[max(bottom - DINO_HEIGHT, 0):bottom, DINO_X:DINO_X + DINO_WIDTH] = 255
        for x, w, h in self.obstacles:
            left = int(round(x))
            lo, hi = max(left, 0), min(left + w, FRAME_SIZE)
            if lo < hi:
                img[GROUND_ROW - h:GROUND_ROW, lo:hi] = 255
        return img

    def _frame(self) -> np.ndarray:
        return preprocess_frame(self.render(), (self.out_size, self.out_size))


def jump_on_proximity(env: DinoRunner, lookahead: float | None = None) -> int:
    """Scripted policy: jump when the nearest obstacle ahead is close."""
    if env.airborne:
        return RUN
    reach = lookahead if lookahead is not None else env.speed * 4
    for x, w, _ in env.obstacles:
        if x + w > DINO_X and x - (DINO_X + DINO_WIDTH) <= reach:
            return JUMP
    return RUN
