#!/usr/bin/env python3
"""Compare a trained runner agent's survival against a uniformly random policy."""

import argparse

import numpy as np

from fdqn.checkpoint import load_checkpoint
from fdqn.runner import checkpoint_env_options, evaluate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("checkpoint")
    parser.add_argument("--episodes", type=int, default=5)
    parser.add_argument("--seed", type=int, default=12345)
    parser.add_argument("--epsilon", type=float, default=0.01)
    args = parser.parse_args()

    params, meta = load_checkpoint(args.checkpoint)
    options = checkpoint_env_options(meta)
    trained = evaluate(params, "dino", args.episodes, args.epsilon, args.seed, options)
    random = evaluate(params, "dino", args.episodes, 1.0, args.seed, options)
    t, r = np.median(trained.rewards), np.median(random.rewards)
    print(f"trained: {trained.rewards}")
    print(f"random:  {random.rewards}")
    print(f"median survival {t:g} vs {r:g}: ratio {t / max(r, 1):.2f}")


if __name__ == "__main__":
    main()
