"""Binary checkpoint format.

Layout (all integers little-endian uint32)::

    b"FDQN" | version | metadata length | metadata (UTF-8 key=value lines)
    | payload: float32 LE, per layer weights (row-major) then bias

The payload length is implied by the network spec stored in the metadata.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .errors import CorruptCheckpointError
from .nn import ConvSpec, NetworkSpec, Parameters

MAGIC = b"FDQN"
VERSION = 1
_HEADER = struct.Struct("<4sII")


def spec_to_meta(spec: NetworkSpec) -> dict[str, str]:
    return {
        "input_shape": "x".join(str(d) for d in spec.input_shape),
        "action_size": str(spec.action_size),
        "hidden_sizes": ",".join(str(h) for h in spec.hidden_sizes),
        "conv_layers": ",".join(f"{c.out_channels}:{c.kernel}:{c.stride}" for c in spec.conv_layers),
    }


def spec_from_meta(meta: dict[str, str]) -> NetworkSpec:
    convs = []
    if meta.get("conv_layers"):
        for item in meta["conv_layers"].split(","):
            o, k, s = (int(v) for v in item.split(":"))
            convs.append(ConvSpec(o, k, s))
    return NetworkSpec(
        input_shape=tuple(int(d) for d in meta["input_shape"].split("x")),
        action_size=int(meta["action_size"]),
        hidden_sizes=tuple(int(h) for h in meta["hidden_sizes"].split(",")),
        conv_layers=tuple(convs),
    )


def encode(params: Parameters, meta: dict) -> bytes:
    fields = dict(meta)
    fields.update(spec_to_meta(params.spec))
    for k, v in fields.items():
        if "\n" in str(v) or "=" in str(k):
            raise ValueError(f"metadata entry {k!r} cannot be encoded")
    text = "".join(f"{k}={v}\n" for k, v in fields.items()).encode("utf-8")
    payload = params.to_vector().astype("<f4").tobytes()
    return _HEADER.pack(MAGIC, VERSION, len(text)) + text + payload


def save_checkpoint(path, params: Parameters, meta: dict) -> None:
    """Write atomically via a ``.partial`` sibling."""
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_bytes(encode(params, meta))
    os.replace(tmp, path)


def decode(data: bytes) -> tuple[Parameters, dict[str, str]]:
    if len(data) < _HEADER.size:
        raise CorruptCheckpointError("truncated header")
    magic, version, meta_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptCheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptCheckpointError(f"unsupported version {version}")
    end = _HEADER.size + meta_len
    if len(data) < end:
        raise CorruptCheckpointError("truncated metadata block")
    try:
        lines = data[_HEADER.size:end].decode("utf-8").splitlines()
        meta = dict(line.split("=", 1) for line in lines if line)
        spec = spec_from_meta(meta)
    except (UnicodeDecodeError, ValueError, KeyError) as exc:
        raise CorruptCheckpointError(f"unreadable metadata: {exc}") from None
    payload = data[end:]
    expected = 4 * spec.param_count()
    if len(payload) != expected:
        raise CorruptCheckpointError(f"payload size {len(payload)} bytes, expected {expected}")
    vec = np.frombuffer(payload, dtype="<f4").astype(np.float32)
    return Parameters.from_vector(spec, vec), meta


def load_checkpoint(path, expected_spec: NetworkSpec | None = None) -> tuple[Parameters, dict[str, str]]:
    params, meta = decode(Path(path).read_bytes())
    if expected_spec is not None and params.spec != expected_spec:
        raise CorruptCheckpointError(
            f"network spec mismatch: checkpoint has {params.spec}, expected {expected_spec}"
        )
    return params, meta
