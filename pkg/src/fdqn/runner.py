"""Training loop, evaluation and seeding."""

from __future__ import annotations

import logging
import math
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import checkpoint as ckpt
from .agent import Agent, epsilon_at
from .config import TrainConfig
from .envs import make_env
from .errors import ConfigError, NumericError
from .metrics import MetricsRecord, write_metrics
from .nn import NetworkSpec, Parameters, forward
from .replay import ReplayBuffer, Transition

log = logging.getLogger("fdqn")


def derive_rng(seed: int, label: str, *extra: int) -> np.random.Generator:
    """Independent generator for a named sub-stream of a master seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(label.encode()), *extra]))


def derive_seed(seed: int, label: str, *extra: int) -> int:
    return int(derive_rng(seed, label, *extra).integers(2**31))


@dataclass
class EvalSummary:
    mean: float
    std: float
    min: float
    max: float
    rewards: list = field(default_factory=list)

    @classmethod
    def from_rewards(cls, rewards) -> "EvalSummary":
        r = np.asarray(rewards, dtype=np.float64)
        return cls(float(r.mean()), float(r.std()), float(r.min()), float(r.max()), [float(v) for v in r])

    def __str__(self):
        return f"mean={self.mean:.2f} std={self.std:.2f} min={self.min:g} max={self.max:g} n={len(self.rewards)}"


@dataclass
class TrainResult:
    agent: Agent
    records: list
    checkpoint_path: Path
    best_checkpoint_path: Path | None = None
    best_eval: EvalSummary | None = None
    target_checksums: list = field(default_factory=list)


def _check_compatible(spec: NetworkSpec, env) -> None:
    if spec.input_shape != tuple(env.observation_shape) or spec.action_size != env.action_size:
        raise ConfigError(
            f"network spec (input {spec.input_shape}, actions {spec.action_size}) does not match "
            f"environment {env.spec.name} (observation {env.observation_shape}, actions {env.action_size})"
        )


def run_episode(params: Parameters, env, eps: float, env_seed: int, rng: np.random.Generator,
                max_steps: int | None = None, on_step=None) -> float:
    """One greedy-with-epsilon episode without learning; returns the total reward."""
    obs = env.reset(env_seed)
    total = 0.0
    steps = 0
    while True:
        if rng.random() < eps:
            action = int(rng.integers(env.action_size))
        else:
            action = int(np.argmax(forward(params, obs[None])[0]))
        res = env.step(action)
        total += res.reward
        steps += 1
        if on_step is not None:
            on_step(env, steps)
        obs = res.observation
        if res.done or (max_steps is not None and steps >= max_steps):
            return total


def evaluate(params: Parameters, env_name: str, episodes: int = 100, eval_epsilon: float = 0.01,
             seed: int = 0, env_options: dict | None = None, workers: int = 1) -> EvalSummary:
    """Evaluate fixed parameters; episode i uses sub-seeds derived from (seed, i).

    Results do not depend on ``workers``: each episode owns its environment
    and generator, and the summary is order-independent.
    """
    env_options = env_options or {}
    _check_compatible(params.spec, make_env(env_name, **env_options))

    def one(i: int) -> float:
        env = make_env(env_name, **env_options)
        return run_episode(params, env, eval_epsilon, derive_seed(seed, "eval-env", i),
                           derive_rng(seed, "eval-policy", i))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rewards = list(pool.map(one, range(episodes)))
    else:
        rewards = [one(i) for i in range(episodes)]
    return EvalSummary.from_rewards(rewards)


def evaluate_checkpoint(path, env_name: str | None = None, episodes: int = 100, eval_epsilon: float = 0.01,
                        seed: int = 0, workers: int = 1) -> EvalSummary:
    params, meta = ckpt.load_checkpoint(path)
    name = env_name or meta.get("env_name")
    options = checkpoint_env_options(meta) if name == meta.get("env_name") else {}
    return evaluate(params, name, episodes, eval_epsilon, seed, options, workers)


def checkpoint_env_options(meta: dict) -> dict:
    raw = meta.get("env_options", "{}")
    return yaml.safe_load(raw) or {}


def _meta(config: TrainConfig, episodes: int) -> dict:
    return {
        "env_name": config.env_name,
        "env_options": yaml.safe_dump(config.env_options, default_flow_style=True).strip(),
        "episodes": episodes,
        "seed": config.seed,
    }


def _ensure_writable(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    probe = path.with_name(path.name + ".partial")
    try:
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def params_checksum(params: Parameters) -> int:
    return zlib.crc32(params.to_vector().tobytes())


def train(config: TrainConfig, track_target: bool = False) -> TrainResult:
    """Run the full training procedure described by ``config``.

    Metrics are written to ``metrics_path + '.partial'`` and renamed when
    the run completes; the final checkpoint is written atomically.
    """
    ckpt_path = Path(config.checkpoint_path)
    metrics_path = Path(config.metrics_path)
    _ensure_writable(ckpt_path)
    _ensure_writable(metrics_path)

    env = make_env(config.env_name, **config.env_options)
    spec = config.network.build(env.observation_shape, env.action_size)
    acfg = config.agent
    agent = Agent(spec, acfg, seed=derive_seed(config.seed, "init"))
    buffer = ReplayBuffer(acfg.memory_size, env.observation_shape, quantize=spec.input_kind == "frames")
    policy_rng = derive_rng(config.seed, "policy")
    replay_rng = derive_rng(config.seed, "replay")
    env_rng = derive_rng(config.seed, "env")
    learn_threshold = max(acfg.learn_start, acfg.batch_size)
    sched = config.epsilon

    result = TrainResult(agent, [], ckpt_path)
    best_path = ckpt_path.with_name(ckpt_path.name + ".best")
    partial_metrics = metrics_path.with_name(metrics_path.name + ".partial")
    global_step = 0

    with open(partial_metrics, "w") as stream:
        for episode in range(config.num_episodes):
            t0 = time.perf_counter()
            eps = epsilon_at(sched, episode)
            obs = env.reset(int(env_rng.integers(2**31)))
            total_reward, steps, losses = 0.0, 0, []
            while True:
                if sched.clock == "step":
                    eps = epsilon_at(sched, global_step)
                action = agent.act(obs, eps, policy_rng)
                res = env.step(action)
                buffer.push(Transition(obs, action, res.reward, res.observation, res.terminal))
                total_reward += res.reward
                steps += 1
                global_step += 1
                if len(buffer) >= learn_threshold:
                    for _ in range(acfg.updates_per_step):
                        try:
                            loss = agent.learn_step(buffer.sample(acfg.batch_size, replay_rng))
                        except NumericError as exc:
                            _abort(config, agent, episode, ckpt_path, str(exc))
                        if not math.isfinite(loss):
                            _abort(config, agent, episode, ckpt_path, f"loss became {loss}")
                        losses.append(loss)
                obs = res.observation
                if res.done:
                    break

            if (episode + 1) % acfg.target_sync_interval == 0:
                agent.sync_target()
            if track_target:
                result.target_checksums.append(params_checksum(agent.target))

            wall_ms = int(round((time.perf_counter() - t0) * 1000)) if config.record_wall_time else 0
            record = MetricsRecord(
                episode=episode + 1,
                steps=steps,
                episode_reward=total_reward,
                epsilon=eps,
                mean_loss=float(np.mean(losses)) if losses else math.nan,
                buffer_size=len(buffer),
                wall_ms=wall_ms,
            )
            write_metrics(stream, record)
            result.records.append(record)
            log.debug("episode %d reward %g eps %.4f loss %.4g", record.episode, total_reward, eps, record.mean_loss)

            if config.eval.every and (episode + 1) % config.eval.every == 0:
                summary = evaluate(agent.online, config.env_name, config.eval.episodes, config.eval.epsilon,
                                   seed=derive_seed(config.seed, "periodic-eval", episode),
                                   env_options=config.env_options)
                log.info("eval after episode %d: %s", episode + 1, summary)
                if result.best_eval is None or summary.mean > result.best_eval.mean:
                    result.best_eval = summary
                    ckpt.save_checkpoint(best_path, agent.online, _meta(config, episode + 1))
                    result.best_checkpoint_path = best_path

    os.replace(partial_metrics, metrics_path)
    ckpt.save_checkpoint(ckpt_path, agent.online, _meta(config, config.num_episodes))
    return result


def _abort(config: TrainConfig, agent: Agent, episode: int, ckpt_path: Path, reason: str):
    diag = ckpt_path.with_name(ckpt_path.name + ".diverged")
    try:
        ckpt.save_checkpoint(diag, agent.online, _meta(config, episode))
    except (NumericError, OSError):
        pass
    raise NumericError(f"training diverged at episode {episode + 1}: {reason}; diagnostic checkpoint {diag}")
