"""Analytic-vs-finite-difference gradient comparison on random small networks."""

from __future__ import annotations

import numpy as np

from .nn import ConvSpec, NetworkSpec, Parameters, finite_diff_grads, init_params, loss_and_grads


def relative_error(analytic: Parameters, numeric: Parameters, floor: float = 1e-7) -> float:
    """Largest elementwise ``|a - b| / max(|a|, |b|, floor)``."""
    worst = 0.0
    for a, b in zip(analytic.arrays(), numeric.arrays()):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
        worst = max(worst, float(np.max(np.abs(a - b) / denom)))
    return worst


def random_problem(rng: np.random.Generator, conv: bool = False, batch: int = 5):
    """A random tiny network (64-bit), batch, actions and targets."""
    actions = int(rng.integers(2, 5))
    hidden = tuple(int(h) for h in rng.integers(2, 7, size=int(rng.integers(1, 3))))
    if conv:
        spec = NetworkSpec((2, 9, 9), actions, hidden, (ConvSpec(3, 3, 2), ConvSpec(2, 2, 1)))
    else:
        spec = NetworkSpec((int(rng.integers(2, 6)),), actions, hidden)
    params = init_params(spec, int(rng.integers(2**31)), dtype=np.float64)
    params = params.map(lambda a: a + rng.normal(0.0, 0.1, a.shape))
    x = rng.normal(size=(batch, *spec.input_shape))
    a = rng.integers(0, actions, size=batch)
    y = rng.normal(size=batch)
    return params, x, a, y


def run_gradcheck(trials: int = 20, seed: int = 0, h: float = 1e-4) -> list[float]:
    """Relative error per trial; every fourth trial uses a convolutional net."""
    rng = np.random.default_rng(seed)
    errors = []
    for i in range(trials):
        params, x, a, y = random_problem(rng, conv=i % 4 == 3)
        _, grads = loss_and_grads(params, x, a, y)
        errors.append(relative_error(grads, finite_diff_grads(params, x, a, y, h)))
    return errors
