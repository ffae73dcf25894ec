"""Command-line entry point: ``fdqn {train,eval,gradcheck,rollout,sweep}``.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime or
numeric failure. Failures print one ``error: ...`` line to stderr.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .config import TrainConfig, apply_overrides, load_config
from .envs import make_env, write_pgm
from .errors import ConfigError, CorruptCheckpointError, FDQNError, NumericError
from .gradcheck import run_gradcheck
from .nn import forward
from .runner import checkpoint_env_options, evaluate_checkpoint, train

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class _UsageError(Exception):
    def __init__(self, message, usage):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message, self.format_usage())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdqn", description="Train and evaluate DQN agents on desk-scale environments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train an agent from a config file")
    p.add_argument("--config", type=Path, help="YAML config file (defaults to the built-in hyperparameters)")
    p.add_argument("--seed", type=int, help="master seed, overrides the config")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted config override, e.g. agent.double_dqn=false (repeatable)")
    p.add_argument("--out", type=Path, default=Path("."), help="root directory for result files")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--env", help="environment name (defaults to the checkpoint's)")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="evaluation threads")

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("rollout", help="run a greedy episode and dump frames as PGM")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--dump-frames", type=Path, metavar="DIR", help="write one PGM per step into DIR (under --out)")
    p.add_argument("--steps", type=int, default=1000, help="maximum number of steps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("sweep", help="grid search over config values")
    p.add_argument("--config", type=Path)
    p.add_argument("--grid", action="append", default=[], metavar="KEY=V1,V2,...",
                   help="values to sweep for one config key (repeatable; cells are the cross product)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--parallel", type=int, default=1, metavar="N", help="run cells in N worker processes")
    return parser


def _configure_logging():
    name = os.environ.get("FDQN_LOG_LEVEL", "error").lower()
    if name not in LOG_LEVELS:
        raise ConfigError(f"FDQN_LOG_LEVEL must be one of {sorted(LOG_LEVELS)}, got {name!r}")
    logging.basicConfig(level=LOG_LEVELS[name], stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _under(out: Path, path: str) -> str:
    p = Path(path)
    return str(p if p.is_absolute() else out / p)


def _base_config(path: Path | None, seed: int | None, overrides: list[str]) -> TrainConfig:
    config = load_config(path) if path is not None else TrainConfig()
    if seed is not None:
        config = replace(config, seed=seed)
    return apply_overrides(config, overrides)


def cmd_train(args) -> int:
    config = _base_config(args.config, args.seed, args.override)
    config = replace(config,
                     checkpoint_path=_under(args.out, config.checkpoint_path),
                     metrics_path=_under(args.out, config.metrics_path))
    result = train(config)
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"metrics: {config.metrics_path}")
    if result.best_eval is not None:
        print(f"best eval: {result.best_eval} ({result.best_checkpoint_path})")
    return EXIT_OK


def cmd_eval(args) -> int:
    summary = evaluate_checkpoint(args.checkpoint, args.env, args.episodes, args.epsilon, args.seed, args.workers)
    print(f"mean: {summary.mean:.6g}")
    print(f"std: {summary.std:.6g}")
    print(f"min: {summary.min:.6g}")
    print(f"max: {summary.max:.6g}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    errors = run_gradcheck(args.trials, args.seed)
    failed = 0
    for i, err in enumerate(errors):
        ok = err < args.tolerance
        failed += not ok
        print(f"trial {i:3d}: max relative error {err:.3e} {'ok' if ok else 'FAIL'}")
    print(f"worst: {max(errors):.3e} tolerance: {args.tolerance:g}")
    if failed:
        print(f"error: {failed} of {len(errors)} trials exceeded tolerance {args.tolerance:g}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_rollout(args) -> int:
    params, meta = ckpt.load_checkpoint(args.checkpoint)
    env = make_env(meta["env_name"], **checkpoint_env_options(meta))
    frame_dir = None
    if args.dump_frames is not None:
        frame_dir = Path(_under(args.out, str(args.dump_frames)))
        try:
            env.render()
        except NotImplementedError as exc:
            raise ConfigError(str(exc)) from None
        frame_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    obs = env.reset(args.seed)
    if frame_dir is not None:
        write_pgm(frame_dir / "frame_000000.pgm", env.render())
    total, steps = 0.0, 0
    while steps < args.steps:
        if rng.random() < args.epsilon:
            action = int(rng.integers(env.action_size))
        else:
            action = int(np.argmax(forward(params, obs[None])[0]))
        res = env.step(action)
        steps += 1
        total += res.reward
        if frame_dir is not None:
            write_pgm(frame_dir / f"frame_{steps:06d}.pgm", env.render())
        obs = res.observation
        if res.done:
            break
    print(f"steps: {steps}")
    print(f"reward: {total:.6g}")
    return EXIT_OK


def parse_grid(items: list[str]) -> list[tuple[str, list[str]]]:
    grid = []
    for item in items:
        if "=" not in item:
            raise ConfigError(f"grid entry {item!r} is not KEY=V1,V2,...")
        key, values = item.split("=", 1)
        parsed = [v.strip() for v in values.split(",") if v.strip()]
        if not parsed:
            raise ConfigError(f"grid entry {key} has no values")
        grid.append((key.strip(), parsed))
    return grid


def _run_cell(config: TrainConfig):
    result = train(config)
    tail = [r.episode_reward for r in result.records[-100:]]
    return float(np.mean(tail)) if tail else float("nan")


def cmd_sweep(args) -> int:
    base = _base_config(args.config, args.seed, [])
    grid = parse_grid(args.grid)
    keys = [k for k, _ in grid]
    cells = []
    for i, values in enumerate(itertools.product(*(v for _, v in grid))):
        overrides = [f"{k}={v}" for k, v in zip(keys, values)]
        cell_dir = args.out / f"cell_{i:03d}"
        config = apply_overrides(base, overrides)
        config = replace(config,
                         checkpoint_path=str(cell_dir / Path(config.checkpoint_path).name),
                         metrics_path=str(cell_dir / Path(config.metrics_path).name))
        cells.append((cell_dir.name, overrides, config))

    args.out.mkdir(parents=True, exist_ok=True)
    if args.parallel > 1:
        with ProcessPoolExecutor(args.parallel) as pool:
            scores = list(pool.map(_run_cell, [c for _, _, c in cells]))
    else:
        scores = [_run_cell(c) for _, _, c in cells]
    with open(args.out / "manifest.txt", "w") as fh:
        for (name, overrides, _), score in zip(cells, scores):
            line = f"{name} {' '.join(overrides)} mean_reward_last100={score:.6g}"
            fh.write(line + "\n")
            print(line)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "rollout": cmd_rollout,
    "sweep": cmd_sweep,
}


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(exc.usage)
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        _configure_logging()
        return COMMANDS[args.command](args)
    except (ConfigError, CorruptCheckpointError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FDQNError, OSError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
