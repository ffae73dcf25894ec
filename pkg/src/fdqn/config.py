"""Experiment configuration: nested dataclasses loaded strictly from YAML."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .agent import AgentConfig, EpsilonSchedule
from .errors import ConfigError
from .nn import ConvSpec, NetworkSpec, default_conv_layers


@dataclass
class NetworkConfig:
    hidden_sizes: list = field(default_factory=lambda: [64, 64])
    # None picks the default conv stack for frame input
    conv_layers: Optional[list] = None

    def __post_init__(self):
        if not self.hidden_sizes or any(not isinstance(h, int) or h <= 0 for h in self.hidden_sizes):
            raise ConfigError(f"network.hidden_sizes must be positive integers, got {self.hidden_sizes!r}")

    def build(self, obs_shape: tuple[int, ...], action_size: int) -> NetworkSpec:
        if len(obs_shape) == 3:
            convs = default_conv_layers() if self.conv_layers is None else tuple(ConvSpec(**c) for c in self.conv_layers)
        else:
            if self.conv_layers:
                raise ConfigError("network.conv_layers given for a vector-observation environment")
            convs = ()
        try:
            return NetworkSpec(tuple(obs_shape), action_size, tuple(self.hidden_sizes), convs)
        except TypeError as exc:
            raise ConfigError(f"bad conv layer definition: {exc}") from None


@dataclass
class EvalConfig:
    every: int = 0
    episodes: int = 100
    epsilon: float = 0.01

    def __post_init__(self):
        if self.every < 0 or self.episodes < 1 or not (0.0 <= self.epsilon <= 1.0):
            raise ConfigError(f"invalid eval settings: {self}")


@dataclass
class TrainConfig:
    """Defaults reproduce the published hyperparameter table.

    Presets under ``configs/`` shrink batch size and episode counts to run
    on a laptop.
    """

    env_name: str = "cartpole"
    env_options: dict = field(default_factory=dict)
    seed: int = 0
    num_episodes: int = 10_000
    agent: AgentConfig = field(default_factory=AgentConfig)
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    checkpoint_path: str = "checkpoint.fdqn"
    metrics_path: str = "metrics.txt"
    record_wall_time: bool = True

    def __post_init__(self):
        if not isinstance(self.num_episodes, int) or self.num_episodes < 0:
            raise ConfigError(f"num_episodes must be a non-negative integer, got {self.num_episodes!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _is_dataclass_type(tp) -> bool:
    return isinstance(tp, type) and dataclasses.is_dataclass(tp)


def _coerce(tp, value, path: str):
    if _is_dataclass_type(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{path} must be a mapping")
        return from_dict(tp, value, prefix=path + ".")
    if tp is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    origin = typing.get_origin(tp)
    if origin is typing.Union and float in typing.get_args(tp) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if tp in (int, float, str, bool) and not isinstance(value, tp):
        raise ConfigError(f"{path} must be of type {tp.__name__}, got {value!r}")
    if tp is int and isinstance(value, bool):
        raise ConfigError(f"{path} must be an integer, got {value!r}")
    return value


def from_dict(cls, data: dict, prefix: str = ""):
    """Build dataclass ``cls`` from a mapping; unknown keys are an error."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown config key: {prefix}{unknown[0]}")
    kwargs = {k: _coerce(hints[k], v, prefix + k) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{prefix.rstrip('.') or 'config'}: {exc}") from None


def load_config(path) -> TrainConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return from_dict(TrainConfig, data)


def _schema_has(cls, parts: list[str]) -> bool:
    hints = typing.get_type_hints(cls)
    if parts[0] not in hints:
        return False
    tp = hints[parts[0]]
    if len(parts) == 1:
        return True
    if _is_dataclass_type(tp):
        return _schema_has(tp, parts[1:])
    # free-form mappings such as env_options accept any sub-key
    return tp is dict


def apply_overrides(config: TrainConfig, overrides: list[str]) -> TrainConfig:
    """Apply ``dotted.key=value`` overrides; values are parsed as YAML scalars."""
    data = config.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        if not _schema_has(TrainConfig, parts):
            raise ConfigError(f"unknown config key: {key}")
        value: Any = yaml.safe_load(raw) if raw.strip() else None
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return from_dict(TrainConfig, data)


def dump_config(config: TrainConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)
