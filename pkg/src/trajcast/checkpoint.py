"""Checkpoint archive: named float32 tensors + a JSON config snapshot.

Layout: a 64-byte header (magic, format version, entry count, config length,
CRC-32 of the payload), then name-indexed entries (u16 name length, utf-8
name, u8 ndim, u32 dims, float32 little-endian data), then the JSON snapshot.
The snapshot carries the training config, optimizer scalars, random-stream
state, and metrics history; everything round-trips bit-exactly.
"""

from __future__ import annotations

import base64
import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np
import torch

MAGIC = b"TCASTCKP"
FORMAT_VERSION = 1
HEADER = struct.Struct("<8sIIQI36x")  # magic, version, n_entries, cfg_len, crc32
assert HEADER.size == 64


class CheckpointError(RuntimeError):
    pass


@dataclass
class Checkpoint:
    tensors: dict[str, np.ndarray]
    config: dict = field(default_factory=dict)
    optimizer_scalars: dict = field(default_factory=dict)
    rng_state: str | None = None       # base64 torch RNG state
    numpy_rng_state: str | None = None
    metrics_history: list = field(default_factory=list)

    def snapshot(self) -> dict:
        return {
            "config": self.config,
            "optimizer_scalars": self.optimizer_scalars,
            "rng_state": self.rng_state,
            "numpy_rng_state": self.numpy_rng_state,
            "metrics_history": self.metrics_history,
        }


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    body = bytearray()
    for name, arr in ckpt.tensors.items():
        # np.ascontiguousarray would promote 0-d arrays to 1-d; keep ndim exact
        data = np.asarray(arr, dtype="<f4", order="C")
        encoded = name.encode()
        body += struct.pack("<H", len(encoded)) + encoded
        body += struct.pack("<B", data.ndim)
        body += struct.pack(f"<{data.ndim}I", *data.shape)
        body += data.tobytes()
    config_bytes = json.dumps(ckpt.snapshot()).encode()
    crc = zlib.crc32(bytes(body) + config_bytes)
    header = HEADER.pack(
        MAGIC, FORMAT_VERSION, len(ckpt.tensors), len(config_bytes), crc
    )
    with open(path, "wb") as fh:
        fh.write(header + bytes(body) + config_bytes)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise CheckpointError("truncated checkpoint file")
    magic, version, n_entries, cfg_len, crc = HEADER.unpack(raw[: HEADER.size])
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format version {version} (expected {FORMAT_VERSION})"
        )
    body = raw[HEADER.size :]
    if zlib.crc32(body) != crc:
        raise CheckpointError("checksum mismatch: checkpoint file is corrupted")
    config_bytes = body[len(body) - cfg_len :]
    offset = 0
    tensors: dict[str, np.ndarray] = {}
    data = body[: len(body) - cfg_len]
    for _ in range(n_entries):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode()
        offset += name_len
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(shape)
        offset += 4 * count
        tensors[name] = arr.copy()
    snapshot = json.loads(config_bytes.decode())
    return Checkpoint(
        tensors=tensors,
        config=snapshot.get("config", {}),
        optimizer_scalars=snapshot.get("optimizer_scalars", {}),
        rng_state=snapshot.get("rng_state"),
        numpy_rng_state=snapshot.get("numpy_rng_state"),
        metrics_history=snapshot.get("metrics_history", []),
    )


def collect_tensors(models: dict[str, torch.nn.Module]) -> dict[str, np.ndarray]:
    out = {}
    for prefix, model in models.items():
        for name, tensor in model.state_dict().items():
            out[f"{prefix}/{name}"] = tensor.detach().cpu().numpy()
    return out


def restore_tensors(ckpt: Checkpoint, models: dict[str, torch.nn.Module]) -> None:
    for prefix, model in models.items():
        state = model.state_dict()
        for name, tensor in state.items():
            key = f"{prefix}/{name}"
            if key not in ckpt.tensors:
                raise CheckpointError(f"checkpoint is missing tensor {key}")
            arr = ckpt.tensors[key]
            if tuple(arr.shape) != tuple(tensor.shape):
                raise CheckpointError(
                    f"tensor {key} has shape {tuple(arr.shape)}, "
                    f"model expects {tuple(tensor.shape)}"
                )
            state[name] = torch.as_tensor(arr, dtype=tensor.dtype)
        model.load_state_dict(state)


def collect_optimizer(prefix: str, optimizer: torch.optim.Optimizer):
    """Split optimizer state into float tensors and JSON-safe scalars."""
    tensors: dict[str, np.ndarray] = {}
    scalars: dict[str, float] = {}
    for pid, state in optimizer.state_dict()["state"].items():
        for key, value in state.items():
            name = f"{prefix}/opt/{pid}/{key}"
            if torch.is_tensor(value):
                if value.ndim == 0:
                    scalars[name] = float(value)
                else:
                    tensors[name] = value.detach().cpu().numpy()
            else:
                scalars[name] = float(value)
    return tensors, scalars


def restore_optimizer(
    prefix: str, optimizer: torch.optim.Optimizer, ckpt: Checkpoint
) -> None:
    """Rebuild optimizer state from checkpoint entries (works on a fresh optimizer)."""
    marker = f"{prefix}/opt/"
    state: dict[int, dict] = {}
    for name, arr in ckpt.tensors.items():
        if not name.startswith(marker):
            continue
        pid_str, key = name[len(marker) :].split("/", 1)
        state.setdefault(int(pid_str), {})[key] = torch.as_tensor(
            arr, dtype=torch.float32
        )
    for name, value in ckpt.optimizer_scalars.items():
        if not name.startswith(marker):
            continue
        pid_str, key = name[len(marker) :].split("/", 1)
        entry = state.setdefault(int(pid_str), {})
        # Adam keeps 'step' as a scalar tensor in current torch
        entry[key] = torch.tensor(value) if key == "step" else value
    if state:
        sd = optimizer.state_dict()
        optimizer.load_state_dict({"state": state, "param_groups": sd["param_groups"]})


def encode_rng(state: torch.Tensor) -> str:
    return base64.b64encode(state.numpy().tobytes()).decode()


def decode_rng(encoded: str) -> torch.Tensor:
    return torch.from_numpy(
        np.frombuffer(base64.b64decode(encoded), dtype=np.uint8).copy()
    )
