"""Small feed-forward Q-network engine written directly against numpy.

Supports two input kinds: flat vectors (MLP) and stacked frames (a few
strided convolutions followed by dense layers). Every hidden layer uses a
rectifier; the output layer is linear with one unit per action.

Parameters are immutable value objects. ``forward`` and ``loss_and_grads``
never touch their inputs, ``adam_step`` returns fresh arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, ContractError, NumericError


@dataclass(frozen=True)
class ConvSpec:
    out_channels: int
    kernel: int
    stride: int

    def __post_init__(self):
        for name in ("out_channels", "kernel", "stride"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value <= 0:
                raise ConfigError(f"conv {name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of a Q-network.

    ``input_shape`` is ``(D,)`` for vector observations or ``(C, H, W)`` for
    stacked frames. ``conv_layers`` must be empty for vector input.
    """

    input_shape: tuple[int, ...]
    action_size: int
    hidden_sizes: tuple[int, ...] = (64, 64)
    conv_layers: tuple[ConvSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        convs = tuple(c if isinstance(c, ConvSpec) else ConvSpec(**c) for c in self.conv_layers)
        object.__setattr__(self, "conv_layers", convs)

        if len(self.input_shape) not in (1, 3) or any(d <= 0 for d in self.input_shape):
            raise ConfigError(f"input_shape must be (D,) or (C, H, W) with positive dims, got {self.input_shape}")
        if self.action_size < 2:
            raise ConfigError(f"action_size must be >= 2, got {self.action_size}")
        if not self.hidden_sizes or any(h <= 0 for h in self.hidden_sizes):
            raise ConfigError(f"hidden_sizes must be non-empty and positive, got {self.hidden_sizes}")
        if self.input_kind == "vector" and self.conv_layers:
            raise ConfigError("conv_layers require frame input (C, H, W)")
        self.conv_output_shapes()  # raises if a conv layer collapses the image

    @property
    def input_kind(self) -> str:
        return "vector" if len(self.input_shape) == 1 else "frames"

    def conv_output_shapes(self) -> list[tuple[int, int, int]]:
        if self.input_kind == "vector":
            return []
        c, h, w = self.input_shape
        shapes = []
        for i, conv in enumerate(self.conv_layers):
            h = (h - conv.kernel) // conv.stride + 1
            w = (w - conv.kernel) // conv.stride + 1
            if h < 1 or w < 1:
                raise ConfigError(f"conv layer {i} produces an empty output ({h}x{w})")
            c = conv.out_channels
            shapes.append((c, h, w))
        return shapes

    def layer_shapes(self) -> list[tuple[tuple[int, ...], tuple[int]]]:
        """(weight shape, bias shape) per layer, in forward order."""
        shapes = []
        if self.input_kind == "vector":
            flat = self.input_shape[0]
        else:
            in_ch = self.input_shape[0]
            for conv, (c, h, w) in zip(self.conv_layers, self.conv_output_shapes()):
                shapes.append(((conv.out_channels, in_ch, conv.kernel, conv.kernel), (conv.out_channels,)))
                in_ch = conv.out_channels
            out = self.conv_output_shapes()
            c, h, w = out[-1] if out else self.input_shape
            flat = c * h * w
        for size in (*self.hidden_sizes, self.action_size):
            shapes.append(((flat, size), (size,)))
            flat = size
        return shapes

    def param_count(self) -> int:
        return sum(int(np.prod(w)) + b[0] for w, b in self.layer_shapes())


def default_conv_layers() -> tuple[ConvSpec, ...]:
    return (ConvSpec(16, 8, 4), ConvSpec(32, 4, 2))


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True)
class Parameters:
    """Network weights, one :class:`Layer` per conv/dense layer.

    Gradients and Adam moments reuse this type, since they have the same
    shapes.
    """

    spec: NetworkSpec
    layers: tuple[Layer, ...]

    def __post_init__(self):
        expected = self.spec.layer_shapes()
        if len(expected) != len(self.layers):
            raise ContractError(f"expected {len(expected)} layers, got {len(self.layers)}")
        for i, ((ws, bs), layer) in enumerate(zip(expected, self.layers)):
            if layer.weights.shape != ws or layer.bias.shape != bs:
                raise ContractError(
                    f"layer {i}: expected weights {ws} / bias {bs}, "
                    f"got {layer.weights.shape} / {layer.bias.shape}"
                )

    def arrays(self) -> Iterator[np.ndarray]:
        for layer in self.layers:
            yield layer.weights
            yield layer.bias

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Parameters":
        return Parameters(self.spec, tuple(Layer(fn(l.weights), fn(l.bias)) for l in self.layers))

    def zip_map(self, other: "Parameters", fn) -> "Parameters":
        return Parameters(
            self.spec,
            tuple(Layer(fn(a.weights, b.weights), fn(a.bias, b.bias)) for a, b in zip(self.layers, other.layers)),
        )

    def copy(self) -> "Parameters":
        return self.map(np.copy)

    def astype(self, dtype) -> "Parameters":
        return self.map(lambda a: a.astype(dtype))

    @property
    def dtype(self):
        return self.layers[0].weights.dtype

    def num_params(self) -> int:
        return sum(a.size for a in self.arrays())

    def to_vector(self) -> np.ndarray:
        """Layer order, weights (row-major) then bias."""
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def from_vector(cls, spec: NetworkSpec, vec: np.ndarray) -> "Parameters":
        vec = np.asarray(vec)
        if vec.size != spec.param_count():
            raise ContractError(f"expected {spec.param_count()} values, got {vec.size}")
        layers, pos = [], 0
        for ws, bs in spec.layer_shapes():
            n = int(np.prod(ws))
            w = vec[pos:pos + n].reshape(ws).copy()
            pos += n
            b = vec[pos:pos + bs[0]].copy()
            pos += bs[0]
            layers.append(Layer(w, b))
        return cls(spec, tuple(layers))

    @classmethod
    def zeros_like(cls, other: "Parameters") -> "Parameters":
        return other.map(np.zeros_like)

    def equals(self, other: "Parameters") -> bool:
        """Bit-for-bit equality."""
        return self.spec == other.spec and all(
            a.dtype == b.dtype and a.tobytes() == b.tobytes() for a, b in zip(self.arrays(), other.arrays())
        )


def init_params(spec: NetworkSpec, seed: int, dtype=np.float32) -> Parameters:
    """He-uniform weights in +-sqrt(6 / fan_in), zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for ws, bs in spec.layer_shapes():
        fan_in = int(np.prod(ws[1:])) if len(ws) == 4 else ws[0]
        bound = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=ws).astype(dtype)
        layers.append(Layer(w, np.zeros(bs, dtype=dtype)))
    return Parameters(spec, tuple(layers))


# ---------------------------------------------------------------- forward


def _check_batch(spec: NetworkSpec, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch)
    if batch.ndim != len(spec.input_shape) + 1 or batch.shape[1:] != spec.input_shape:
        raise ContractError(f"batch shape {batch.shape} does not match input shape (N, {spec.input_shape})")
    return batch


def _im2col(x: np.ndarray, k: int, s: int) -> tuple[np.ndarray, int, int]:
    win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::s, ::s]
    n, c, ho, wo = win.shape[:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
    return cols, ho, wo


def _col2im(dcols: np.ndarray, x_shape, k: int, s: int, ho: int, wo: int) -> np.ndarray:
    n, c = x_shape[:2]
    d = dcols.reshape(n, ho, wo, c, k, k).transpose(0, 3, 4, 5, 1, 2)
    dx = np.zeros(x_shape, dtype=dcols.dtype)
    for i in range(k):
        for j in range(k):
            dx[:, :, i:i + s * (ho - 1) + 1:s, j:j + s * (wo - 1) + 1:s] += d[:, :, i, j]
    return dx


def _forward_cached(params: Parameters, batch: np.ndarray):
    spec = params.spec
    dtype = params.dtype
    x = np.asarray(batch, dtype=dtype)
    n = x.shape[0]
    cache = []
    n_conv = len(spec.conv_layers)
    for conv, layer in zip(spec.conv_layers, params.layers[:n_conv]):
        cols, ho, wo = _im2col(x, conv.kernel, conv.stride)
        wmat = layer.weights.reshape(conv.out_channels, -1)
        z = cols @ wmat.T + layer.bias
        a = np.maximum(z, 0)
        cache.append(("conv", x.shape, cols, ho, wo, z))
        x = a.reshape(n, ho, wo, conv.out_channels).transpose(0, 3, 1, 2)
    if n_conv:
        cache.append(("flatten", x.shape))
        x = x.reshape(n, -1)
    dense = params.layers[n_conv:]
    for i, layer in enumerate(dense):
        z = x @ layer.weights + layer.bias
        cache.append(("dense", x, z))
        x = np.maximum(z, 0) if i < len(dense) - 1 else z
    return x, cache


def forward(params: Parameters, batch: np.ndarray) -> np.ndarray:
    """Q-values of shape ``(N, action_size)`` in the parameter dtype."""
    batch = _check_batch(params.spec, batch)
    q, _ = _forward_cached(params, batch)
    return q


def _check_finite(name: str, arr: np.ndarray):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {name}")


def masked_mse(q: np.ndarray, actions: np.ndarray, targets: np.ndarray) -> float:
    diff = q[np.arange(len(actions)), actions] - targets
    return float(np.mean(diff * diff))


def _check_loss_inputs(params, batch, actions, targets):
    batch = _check_batch(params.spec, batch)
    actions = np.asarray(actions)
    targets = np.asarray(targets)
    n = batch.shape[0]
    if n < 1 or actions.shape != (n,) or targets.shape != (n,):
        raise ContractError(f"need matching non-empty batch/actions/targets, got {n}, {actions.shape}, {targets.shape}")
    if not np.issubdtype(actions.dtype, np.integer) or actions.min() < 0 or actions.max() >= params.spec.action_size:
        raise ContractError(f"actions must be integers in [0, {params.spec.action_size})")
    _check_finite("batch", batch)
    _check_finite("targets", targets)
    for i, layer in enumerate(params.layers):
        _check_finite(f"layer {i} weights", layer.weights)
        _check_finite(f"layer {i} bias", layer.bias)
    return batch, actions, targets


def loss_and_grads(params: Parameters, batch, actions, targets) -> tuple[float, Parameters]:
    """Mean squared TD error on the taken actions, plus its exact gradient."""
    batch, actions, targets = _check_loss_inputs(params, batch, actions, targets)
    q, cache = _forward_cached(params, batch)
    n = q.shape[0]
    rows = np.arange(n)
    diff = q[rows, actions] - targets.astype(q.dtype)
    loss = float(np.mean(diff * diff))

    grad = np.zeros_like(q)
    grad[rows, actions] = (2.0 / n) * diff

    grads: list[Layer | None] = [None] * len(params.layers)
    li = len(params.layers) - 1
    for pos in range(len(cache) - 1, -1, -1):
        entry = cache[pos]
        kind = entry[0]
        if kind == "dense":
            _, x, _ = entry
            layer = params.layers[li]
            grads[li] = Layer(x.T @ grad, grad.sum(axis=0))
            if pos > 0:
                grad = grad @ layer.weights.T
                prev = cache[pos - 1]
                if prev[0] == "dense":
                    grad = grad * (prev[2] > 0)
            li -= 1
        elif kind == "flatten":
            grad = grad.reshape(entry[1])
        else:
            _, x_shape, cols, ho, wo, z = entry
            conv = params.spec.conv_layers[li]
            layer = params.layers[li]
            # grad arrives as (N, C, Ho, Wo) w.r.t. this layer's rectified output
            gz = grad.transpose(0, 2, 3, 1).reshape(-1, conv.out_channels) * (z > 0)
            gw = (gz.T @ cols).reshape(layer.weights.shape)
            grads[li] = Layer(gw, gz.sum(axis=0))
            if li > 0:
                dcols = gz @ layer.weights.reshape(conv.out_channels, -1)
                grad = _col2im(dcols, x_shape, conv.kernel, conv.stride, ho, wo)
            li -= 1
    return loss, Parameters(params.spec, tuple(grads))


def finite_diff_grads(params: Parameters, batch, actions, targets, h: float = 1e-4) -> Parameters:
    """Central-difference gradient of the masked MSE, evaluated in float64.

    Test oracle only: one pair of forward passes per scalar parameter.
    """
    if h <= 0:
        raise ContractError("h must be positive")
    batch, actions, targets = _check_loss_inputs(params, batch, actions, targets)
    p64 = params.astype(np.float64)
    batch = batch.astype(np.float64)
    targets = targets.astype(np.float64)
    arrays = list(p64.arrays())
    out = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = masked_mse(forward(p64, batch), actions, targets)
            flat[i] = orig - h
            lm = masked_mse(forward(p64, batch), actions, targets)
            flat[i] = orig
            gflat[i] = (lp - lm) / (2 * h)
        out.append(g)
    layers = tuple(Layer(out[2 * i], out[2 * i + 1]) for i in range(len(params.layers)))
    return Parameters(params.spec, layers)


# ---------------------------------------------------------------- adam


@dataclass(frozen=True)
class AdamState:
    m: Parameters
    v: Parameters
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    @classmethod
    def zeros(cls, params: Parameters, **kwargs) -> "AdamState":
        return cls(Parameters.zeros_like(params), Parameters.zeros_like(params), **kwargs)


def global_norm(grads: Parameters) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(a, dtype=np.float64))) for a in grads.arrays())))


def clip_by_global_norm(grads: Parameters, max_norm: float) -> Parameters:
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0:
        return grads
    scale = max_norm / norm
    return grads.map(lambda a: (a * scale).astype(a.dtype))


def adam_step(params: Parameters, grads: Parameters, state: AdamState, lr: float) -> tuple[Parameters, AdamState]:
    """One bias-corrected Adam update in the descent direction."""
    if lr <= 0:
        raise ContractError("learning rate must be positive")
    if grads.spec != params.spec or state.m.spec != params.spec:
        raise ContractError("params, grads and optimizer state disagree on network spec")
    for p, g in zip(params.arrays(), grads.arrays()):
        if p.shape != g.shape:
            raise ContractError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
    b1, b2, eps = state.beta1, state.beta2, state.eps_adam
    t = state.t + 1
    m = state.m.zip_map(grads, lambda m_, g: (b1 * m_ + (1 - b1) * g).astype(m_.dtype))
    v = state.v.zip_map(grads, lambda v_, g: (b2 * v_ + (1 - b2) * (g * g)).astype(v_.dtype))
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t

    def update(p, mv):
        m_, v_ = mv
        step = lr * (m_ / c1) / (np.sqrt(v_ / c2) + eps)
        return (p - step).astype(p.dtype)

    new_layers = []
    for pl, ml, vl in zip(params.layers, m.layers, v.layers):
        new_layers.append(Layer(update(pl.weights, (ml.weights, vl.weights)), update(pl.bias, (ml.bias, vl.bias))))
    new_state = AdamState(m, v, t, b1, b2, eps)
    return Parameters(params.spec, tuple(new_layers)), new_state


__all__ = [
    "AdamState",
    "ConvSpec",
    "Layer",
    "NetworkSpec",
    "Parameters",
    "adam_step",
    "clip_by_global_norm",
    "default_conv_layers",
    "finite_diff_grads",
    "forward",
    "global_norm",
    "init_params",
    "loss_and_grads",
    "masked_mse",
]
