#!/usr/bin/env python3
"""Train on the five-state chain and print the learned Q-table next to Q*."""

import argparse
from dataclasses import replace

import numpy as np

from fdqn.config import load_config
from fdqn.envs import Chain
from fdqn.nn import forward
from fdqn.runner import train


def q_star(gamma, n=5):
    env, q = Chain(n), np.zeros((n, 2))
    for _ in range(500):
        v = q.max(axis=1)
        for s in range(n - 1):
            for a in range(2):
                s2, r, done = env.transition(s, a)
                q[s, a] = r + (0.0 if done else gamma * v[s2])
    return q[: n - 1]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default="configs/chain.yaml")
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = parser.parse_args()
    base = load_config(args.config)
    target = q_star(base.agent.gamma)
    print("Q*:\n", np.round(target, 4))
    for seed in args.seeds:
        cfg = replace(base, seed=seed, checkpoint_path=f"chain_seed{seed}.fdqn",
                      metrics_path=f"chain_seed{seed}.txt")
        q = forward(train(cfg).agent.online, np.eye(5, dtype=np.float32)[:4])
        print(f"seed {seed}: max |Q - Q*| = {np.abs(q - target).max():.2e}, "
              f"policy {'matches' if np.array_equal(q.argmax(1), target.argmax(1)) else 'differs'}")


if __name__ == "__main__":
    main()
