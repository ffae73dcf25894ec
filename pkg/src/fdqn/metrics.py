"""Per-episode metrics records, one ``key:value`` line each."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import IO, Iterable


@dataclass(frozen=True)
class MetricsRecord:
    episode: int
    steps: int
    episode_reward: float
    epsilon: float
    mean_loss: float
    buffer_size: int
    wall_ms: int


KEYS = tuple(f.name for f in fields(MetricsRecord))
_INT_KEYS = {"episode", "steps", "buffer_size", "wall_ms"}


def _fmt(key: str, value) -> str:
    if key in _INT_KEYS:
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.6g}"


def format_record(record: MetricsRecord) -> str:
    return " ".join(f"{k}:{_fmt(k, getattr(record, k))}" for k in KEYS)


def write_metrics(stream: IO[str], record: MetricsRecord) -> None:
    stream.write(format_record(record) + "\n")
    stream.flush()


def parse_record(line: str) -> MetricsRecord:
    pairs = [item.split(":", 1) for item in line.split()]
    keys = tuple(k for k, _ in pairs)
    if keys != KEYS:
        raise ValueError(f"unexpected metrics keys {keys}")
    values = {k: int(v) if k in _INT_KEYS else float(v) for k, v in pairs}
    return MetricsRecord(**values)


def read_metrics(lines: Iterable[str]) -> list[MetricsRecord]:
    return [parse_record(line) for line in lines if line.strip()]
