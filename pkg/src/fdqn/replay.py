"""Fixed-capacity FIFO experience replay with uniform sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, NotReadyError


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass(frozen=True)
class TransitionBatch:
    """Column-wise view of a sampled mini-batch."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self):
        return len(self.actions)

    @classmethod
    def from_transitions(cls, transitions) -> "TransitionBatch":
        transitions = list(transitions)
        return cls(
            states=np.stack([np.asarray(t.state, dtype=np.float32) for t in transitions]),
            actions=np.array([t.action for t in transitions], dtype=np.int64),
            rewards=np.array([t.reward for t in transitions], dtype=np.float32),
            next_states=np.stack([np.asarray(t.next_state, dtype=np.float32) for t in transitions]),
            dones=np.array([t.done for t in transitions], dtype=bool),
        )

    def transitions(self) -> list[Transition]:
        return [
            Transition(self.states[i], int(self.actions[i]), float(self.rewards[i]), self.next_states[i], bool(self.dones[i]))
            for i in range(len(self))
        ]


class ReplayBuffer:
    """Ring buffer of transitions, preallocated at ``capacity``.

    With ``quantize=True`` observations are assumed to lie on the 1/255 grid
    in [0, 1] (preprocessed frames) and are stored as uint8.
    """

    def __init__(self, capacity: int, obs_shape: tuple[int, ...], quantize: bool = False):
        if not isinstance(capacity, (int, np.integer)) or capacity < 1:
            raise ConfigError(f"replay capacity must be a positive integer, got {capacity!r}")
        self.capacity = int(capacity)
        self.obs_shape = tuple(obs_shape)
        self.quantize = quantize
        obs_dtype = np.uint8 if quantize else np.float32
        # np.zeros maps lazily, so an unfilled 1M buffer costs little
        self._states = np.zeros((self.capacity, *self.obs_shape), dtype=obs_dtype)
        self._next_states = np.zeros((self.capacity, *self.obs_shape), dtype=obs_dtype)
        self._actions = np.zeros(self.capacity, dtype=np.int64)
        self._rewards = np.zeros(self.capacity, dtype=np.float32)
        self._dones = np.zeros(self.capacity, dtype=bool)
        self.write_cursor = 0
        self.size = 0
        self.total_pushes = 0

    def __len__(self):
        return self.size

    @property
    def evictions(self) -> int:
        return self.total_pushes - self.size

    def _encode(self, obs) -> np.ndarray:
        obs = np.asarray(obs)
        if obs.shape != self.obs_shape:
            raise ContractError(f"observation shape {obs.shape} != buffer shape {self.obs_shape}")
        if self.quantize:
            return np.rint(obs * 255.0).astype(np.uint8)
        return obs

    def _decode(self, stored: np.ndarray) -> np.ndarray:
        if self.quantize:
            return stored.astype(np.float32) / np.float32(255.0)
        return stored

    def push(self, transition: Transition) -> None:
        i = self.write_cursor
        self._states[i] = self._encode(transition.state)
        self._next_states[i] = self._encode(transition.next_state)
        self._actions[i] = transition.action
        self._rewards[i] = transition.reward
        self._dones[i] = transition.done
        self.write_cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.total_pushes += 1

    def _gather(self, idx: np.ndarray) -> TransitionBatch:
        return TransitionBatch(
            states=self._decode(self._states[idx]),
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_states=self._decode(self._next_states[idx]),
            dones=self._dones[idx],
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """Uniform draw with replacement; the buffer itself is not modified."""
        if batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.size < batch_size:
            raise NotReadyError(f"buffer holds {self.size} transitions, {batch_size} requested")
        idx = rng.integers(0, self.size, size=batch_size)
        return self._gather(idx)

    def contents(self) -> TransitionBatch:
        """All stored transitions, oldest first."""
        if self.size < self.capacity:
            idx = np.arange(self.size)
        else:
            idx = (np.arange(self.capacity) + self.write_cursor) % self.capacity
        return self._gather(idx)
