"""Versioned binary checkpoint serialization.

Layout: magic, uint32 format version, JSON meta block (config, latent spec,
arch, norm stats, optimizer step counts), tensor table (name, shape,
little-endian float32 payload), trailing 64-bit content hash. Serialization
is canonical, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .data import NormStats
from .errors import CheckpointFormatError
from .models import ArchConfig, LatentSpec
from .training import CHECKPOINT_VERSION, ModelCheckpoint, TrainingConfig

MAGIC = b"LOADGAN\x00"
_DTYPE_F32 = 0


def _meta_dict(ckpt: ModelCheckpoint) -> dict:
    return {
        "mode": ckpt.mode,
        "epoch": ckpt.epoch,
        "config": dataclasses.asdict(ckpt.config),
        "latent_spec": dataclasses.asdict(ckpt.latent_spec),
        "arch": dataclasses.asdict(ckpt.arch),
        "norm_stats": dataclasses.asdict(ckpt.norm_stats) if ckpt.norm_stats else None,
        "adam_critic": {"step": ckpt.adam_critic["step"], "names": ckpt.adam_critic["names"]},
        "adam_gen": {"step": ckpt.adam_gen["step"], "names": ckpt.adam_gen["names"]},
    }


def _tensor_table(ckpt: ModelCheckpoint) -> list[tuple[str, np.ndarray]]:
    table = [(name, ckpt.params[name]) for name in sorted(ckpt.params)]
    for group in ("adam_critic", "adam_gen"):
        state = getattr(ckpt, group)
        for kind in ("m", "v"):
            for i, arr in enumerate(state[kind]):
                table.append((f"{group}.{kind}.{i}", arr))
    return table


def checkpoint_bytes(ckpt: ModelCheckpoint) -> bytes:
    chunks = [MAGIC, struct.pack("<I", ckpt.version)]
    meta = json.dumps(_meta_dict(ckpt), sort_keys=True, separators=(",", ":")).encode()
    chunks.append(struct.pack("<I", len(meta)))
    chunks.append(meta)
    table = _tensor_table(ckpt)
    chunks.append(struct.pack("<I", len(table)))
    for name, arr in table:
        raw = np.ascontiguousarray(arr, dtype="<f4")
        name_b = name.encode()
        chunks.append(struct.pack("<H", len(name_b)))
        chunks.append(name_b)
        chunks.append(struct.pack("<B", raw.ndim))
        chunks.append(struct.pack(f"<{raw.ndim}I", *raw.shape) if raw.ndim else b"")
        chunks.append(struct.pack("<B", _DTYPE_F32))
        chunks.append(raw.tobytes())
    body = b"".join(chunks)
    digest = hashlib.blake2b(body, digest_size=8).digest()
    return body + digest


def content_hash(ckpt: ModelCheckpoint) -> str:
    return checkpoint_bytes(ckpt)[-8:].hex()


def save_checkpoint(ckpt: ModelCheckpoint, path: str | Path) -> str:
    """Write the checkpoint; returns its content hash (hex)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = checkpoint_bytes(ckpt)
    path.write_bytes(blob)
    return blob[-8:].hex()


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointFormatError(
                f"truncated checkpoint: needed {n} bytes at offset {self.pos}, "
                f"file has {len(self.blob)}"
            )
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointFormatError(f"no such checkpoint file: {path}")
    blob = path.read_bytes()
    if len(blob) < len(MAGIC) + 4 + 8:
        raise CheckpointFormatError(f"truncated checkpoint: {len(blob)} bytes")
    body, digest = blob[:-8], blob[-8:]
    if body[: len(MAGIC)] != MAGIC:
        raise CheckpointFormatError("bad magic bytes: not a loadgan checkpoint")
    if hashlib.blake2b(body, digest_size=8).digest() != digest:
        raise CheckpointFormatError("content hash mismatch: checkpoint is corrupt")

    r = _Reader(body)
    r.take(len(MAGIC))
    version = r.u32()
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(
            f"unsupported checkpoint format version {version}, expected {CHECKPOINT_VERSION}"
        )
    meta_len = r.u32()
    try:
        meta = json.loads(r.take(meta_len).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"corrupt checkpoint meta block: {exc}") from None

    tensors: dict[str, np.ndarray] = {}
    n_tensors = r.u32()
    for _ in range(n_tensors):
        name = r.take(r.u16()).decode()
        ndim = r.u8()
        shape = struct.unpack(f"<{ndim}I", r.take(4 * ndim)) if ndim else ()
        dtype_code = r.u8()
        if dtype_code != _DTYPE_F32:
            raise CheckpointFormatError(f"unknown tensor dtype code {dtype_code}")
        count = int(np.prod(shape)) if shape else 1
        raw = r.take(4 * count)
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()

    latent_meta = dict(meta["latent_spec"])
    latent_meta["continuous_range"] = tuple(latent_meta["continuous_range"])
    spec = LatentSpec(**latent_meta)
    arch = ArchConfig(**meta["arch"])
    cfg = TrainingConfig(**meta["config"])
    stats = NormStats(**meta["norm_stats"]) if meta["norm_stats"] else None

    params = {k: v for k, v in tensors.items() if not k.startswith("adam_")}
    adam = {}
    for group in ("adam_critic", "adam_gen"):
        names = meta[group]["names"]
        adam[group] = {
            "step": int(meta[group]["step"]),
            "names": list(names),
            "m": [tensors[f"{group}.m.{i}"] for i in range(len(names))],
            "v": [tensors[f"{group}.v.{i}"] for i in range(len(names))],
        }

    return ModelCheckpoint(
        version=version,
        mode=meta["mode"],
        epoch=int(meta["epoch"]),
        config=cfg,
        latent_spec=spec,
        arch=arch,
        norm_stats=stats,
        params=params,
        adam_critic=adam["adam_critic"],
        adam_gen=adam["adam_gen"],
    )
