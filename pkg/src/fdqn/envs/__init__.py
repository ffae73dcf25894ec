"""Environment registry."""

from __future__ import annotations

from ..errors import ConfigError
from .base import Env, EnvSpec, ScaleObservation, StepResult
from .cartpole import CartPole
from .chain import Chain
from .dino import DinoRunner
from .frames import FrameStack, preprocess_frame, read_pgm, stack_frames, write_pgm
from .mountain_car import MountainCar

ENVIRONMENTS = {
    "cartpole": CartPole,
    "mountaincar": MountainCar,
    "dino": DinoRunner,
    "chain": Chain,
}


def make_env(name: str, scale_observations: bool = False, **options):
    """Build an environment by name.

    ``scale_observations`` maps MountainCar's (position, velocity) onto
    roughly [-1, 1]; other environments ignore it.
    """
    try:
        cls = ENVIRONMENTS[name]
    except KeyError:
        raise ConfigError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None
    try:
        env = cls(**options)
    except TypeError as exc:
        raise ConfigError(f"bad options for {name}: {exc}") from None
    if scale_observations and name == "mountaincar":
        env = ScaleObservation(env, offset=(-0.3, 0.0), scale=(1 / 0.9, 1 / 0.07))
    return env


__all__ = [
    "ENVIRONMENTS",
    "CartPole",
    "Chain",
    "DinoRunner",
    "Env",
    "EnvSpec",
    "FrameStack",
    "MountainCar",
    "ScaleObservation",
    "StepResult",
    "make_env",
    "preprocess_frame",
    "read_pgm",
    "stack_frames",
    "write_pgm",
]
