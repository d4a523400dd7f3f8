"""Binary checkpoint format.

Layout (all integers uint32 little-endian, all floats float32 little-endian)::

    b"HYQA" | version | n | d | vocab_size
    vocab_bytes | UTF-8 vocabulary joined by "\\n"
    W_p (d * n, row-major) | b_p (d) | w_f | b_f
    config_bytes | UTF-8 JSON run-config snapshot
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Vocab, WordVectorTable, load_word_vectors
from .encoder import ProjectionLayer
from .model import HyperQA
from .objective import ScoreLayer

MAGIC = b"HYQA"
FORMAT_VERSION = 1
_U32 = struct.Struct("<I")
_F32 = np.dtype("<f4")


class CheckpointError(ValueError):
    """A checkpoint file is corrupt or inconsistent with its inputs."""


@dataclass
class Checkpoint:
    vocab: Vocab
    projection: ProjectionLayer
    scorer: ScoreLayer
    config: dict

    @property
    def in_dim(self) -> int:
        return self.projection.in_dim

    @property
    def out_dim(self) -> int:
        return self.projection.out_dim

    @property
    def similarity(self) -> str:
        return self.config.get("similarity", "hyperbolic")

    def to_model(self, table: WordVectorTable) -> HyperQA:
        if table.dim != self.in_dim:
            raise CheckpointError(
                f"checkpoint expects {self.in_dim}-dimensional word vectors, got {table.dim}"
            )
        if table.vocab != self.vocab:
            raise CheckpointError("word-vector table was built for a different vocabulary")
        return HyperQA(table, self.projection, self.scorer, self.similarity)


def _floats(arr) -> bytes:
    return np.ascontiguousarray(arr, dtype=_F32).tobytes()


def save_checkpoint(path, model: HyperQA, config: dict | None = None) -> None:
    """Write ``model`` atomically; the previous file stays intact on failure."""
    weight = model.projection.weight
    d, n = weight.shape
    vocab_bytes = "\n".join(model.vocab.itos).encode("utf-8")
    config_bytes = json.dumps(dict(config or {}, similarity=model.similarity), sort_keys=True).encode("utf-8")
    parts = [
        MAGIC,
        _U32.pack(FORMAT_VERSION), _U32.pack(n), _U32.pack(d), _U32.pack(len(model.vocab)),
        _U32.pack(len(vocab_bytes)), vocab_bytes,
        _floats(weight), _floats(model.projection.bias),
        _floats([model.scorer.weight]), _floats([model.scorer.bias]),
        _U32.pack(len(config_bytes)), config_bytes,
    ]
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(b"".join(parts))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise CheckpointError(f"{self.path}: truncated checkpoint")
        out = self.data[self.pos:self.pos + size]
        self.pos += size
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype=_F32).astype(np.float64)


def load_checkpoint(path) -> Checkpoint:
    data = Path(path).read_bytes()
    reader = _Reader(data, path)
    if reader.take(4) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    n, d, vocab_size = reader.u32(), reader.u32(), reader.u32()
    itos = reader.take(reader.u32()).decode("utf-8").split("\n")
    if len(itos) != vocab_size:
        raise CheckpointError(f"{path}: header says {vocab_size} vocabulary entries, found {len(itos)}")
    weight = reader.floats(d * n).reshape(d, n)
    bias = reader.floats(d)
    w_f, b_f = reader.floats(1)[0], reader.floats(1)[0]
    config = json.loads(reader.take(reader.u32()).decode("utf-8"))
    if reader.pos != len(data):
        raise CheckpointError(f"{path}: {len(data) - reader.pos} unexpected trailing bytes")
    try:
        vocab = Vocab.from_list(itos)
    except ValueError as exc:
        raise CheckpointError(f"{path}: {exc}") from None
    return Checkpoint(vocab, ProjectionLayer(weight, bias), ScoreLayer(w_f, b_f), config)


def load_model(path, vectors=None) -> tuple[HyperQA, Checkpoint]:
    """Load a checkpoint and attach word vectors (from ``vectors`` or the saved config)."""
    ckpt = load_checkpoint(path)
    vectors = vectors or ckpt.config.get("vectors")
    if not vectors:
        raise CheckpointError(f"{path}: no word-vector file given and none recorded in the checkpoint")
    return ckpt.to_model(load_word_vectors(vectors, ckpt.vocab)), ckpt
