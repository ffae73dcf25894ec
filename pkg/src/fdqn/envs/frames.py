"""Frame preprocessing, stacking and PGM dumps for pixel environments."""

from __future__ import annotations

from collections import deque
from pathlib import Path

import numpy as np

from ..errors import ContractError


def preprocess_frame(raw: np.ndarray, out_shape: tuple[int, int] = (48, 48)) -> np.ndarray:
    """Block-mean downsample an 8-bit frame and return values on the 1/255 grid.

    Block means are rounded half-up to 8 bits before scaling to [0, 1].
    """
    raw = np.asarray(raw)
    if raw.ndim != 2:
        raise ContractError(f"expected a 2-D grayscale frame, got shape {raw.shape}")
    h0, w0 = raw.shape
    h, w = out_shape
    if h0 % h or w0 % w:
        raise ContractError(f"frame {raw.shape} is not an integer multiple of {out_shape}")
    fy, fx = h0 // h, w0 // w
    area = fy * fx
    sums = raw.astype(np.int64).reshape(h, fy, w, fx).sum(axis=(1, 3))
    quantized = (2 * sums + area) // (2 * area)
    return quantized.astype(np.float32) / np.float32(255.0)


class FrameStack:
    """Sliding window over the ``depth`` most recent frames."""

    def __init__(self, depth: int = 4):
        if depth < 1:
            raise ContractError("stack depth must be >= 1")
        self.depth = depth
        self._frames: deque = deque(maxlen=depth)

    def reset(self, frame: np.ndarray) -> np.ndarray:
        self._frames.clear()
        for _ in range(self.depth):
            self._frames.append(frame)
        return self.observation()

    def push(self, frame: np.ndarray) -> np.ndarray:
        if not self._frames:
            return self.reset(frame)
        self._frames.append(frame)
        return self.observation()

    def observation(self) -> np.ndarray:
        return np.stack(self._frames)


def stack_frames(history, new_frame, depth: int = 4) -> np.ndarray:
    """Functional form of :class:`FrameStack`: keep the last ``depth`` frames."""
    frames = list(history)[-(depth - 1):] if depth > 1 else []
    frames.append(new_frame)
    while len(frames) < depth:
        frames.insert(0, frames[0])
    return np.stack(frames)


def write_pgm(path, image: np.ndarray) -> None:
    """Binary (P5) 8-bit PGM."""
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ContractError("PGM output needs a 2-D uint8 image")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError("only 8-bit PGM is supported")
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)
