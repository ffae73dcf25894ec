#!/usr/bin/env python3
"""Train a preset on several seeds and evaluate each run's selected checkpoint.

    python3 scripts/train_and_eval.py configs/cartpole.yaml --seeds 1 2 3
    python3 scripts/train_and_eval.py configs/mountaincar.yaml --seeds 1 --override num_episodes=3000
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from fdqn.config import apply_overrides, load_config
from fdqn.runner import evaluate_checkpoint, train


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("config", type=Path)
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    parser.add_argument("--override", action="append", default=[])
    parser.add_argument("--episodes", type=int, default=100, help="evaluation episodes")
    parser.add_argument("--eval-seed", type=int, default=12345)
    parser.add_argument("--out", type=Path, default=Path("runs"))
    args = parser.parse_args()

    base = apply_overrides(load_config(args.config), args.override)
    means = []
    for seed in args.seeds:
        stem = f"{args.config.stem}_seed{seed}"
        cfg = replace(base, seed=seed, checkpoint_path=str(args.out / f"{stem}.fdqn"),
                      metrics_path=str(args.out / f"{stem}.txt"))
        result = train(cfg)
        final = evaluate_checkpoint(result.checkpoint_path, episodes=args.episodes, seed=args.eval_seed)
        line = f"seed {seed}: final {final}"
        chosen = final
        if result.best_checkpoint_path is not None:
            chosen = evaluate_checkpoint(result.best_checkpoint_path, episodes=args.episodes, seed=args.eval_seed)
            line += f" | best {chosen}"
        means.append(chosen.mean)
        print(line, flush=True)
    print(f"selected means: {np.round(means, 2).tolist()} max {max(means):.2f} median {np.median(means):.2f}")


if __name__ == "__main__":
    main()
