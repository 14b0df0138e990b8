"""Binary checkpoint format for model parameters.

Layout (all integers little-endian):

    magic           4 bytes  b"ICNN"
    format version  u16      currently 1
    layer count     u32      number of parameterized layers
    manifest        per tensor (weight then bias, per layer): u32 rank,
                    then rank u32 dims
    tensor data     raw little-endian float32, in manifest order
    sgd config      f64 learning rate, u32 batch size, u32 epochs, u64 seed
    epoch counter   u32

Round-trips are bit-exact: tensors are stored and returned as float32.
"""

import struct
from pathlib import Path

import numpy as np

from .model import ModelParams, SgdConfig

MAGIC = b"ICNN"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, params: ModelParams, sgd: SgdConfig, epoch: int) -> None:
    path = Path(path)
    tensors = []
    for w, b in zip(params.weights, params.biases):
        tensors.append(np.ascontiguousarray(w, dtype=np.float32))
        tensors.append(np.ascontiguousarray(b, dtype=np.float32))
    parts = [MAGIC, struct.pack("<H", FORMAT_VERSION), struct.pack("<I", len(params.weights))]
    for t in tensors:
        parts.append(struct.pack("<I", t.ndim))
        parts.append(struct.pack(f"<{t.ndim}I", *t.shape))
    for t in tensors:
        parts.append(t.astype("<f4", copy=False).tobytes())
    parts.append(struct.pack("<dIIQ", sgd.learning_rate, sgd.batch_size, sgd.epochs, sgd.seed))
    parts.append(struct.pack("<I", epoch))
    path.write_bytes(b"".join(parts))


def load_checkpoint(path):
    """Read a checkpoint back; returns ``(params, sgd_config, epoch)``."""
    data = Path(path).read_bytes()
    off = 0

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(data):
            raise CheckpointError(f"truncated checkpoint at byte {off}")
        vals = struct.unpack_from(fmt, data, off)
        off += size
        return vals

    magic = data[:4]
    off = 4
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (version,) = take("<H")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (layer_count,) = take("<I")
    shapes = []
    for _ in range(2 * layer_count):
        (rank,) = take("<I")
        shapes.append(take(f"<{rank}I"))
    tensors = []
    for shape in shapes:
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if off + nbytes > len(data):
            raise CheckpointError(f"truncated tensor data at byte {off}")
        t = np.frombuffer(data, dtype="<f4", count=count, offset=off).reshape(shape)
        tensors.append(t.copy())
        off += nbytes
    lr, batch_size, epochs, seed = take("<dIIQ")
    (epoch,) = take("<I")
    if off != len(data):
        raise CheckpointError(f"{len(data) - off} trailing bytes after checkpoint payload")

    params = ModelParams(tensors[0::2], tensors[1::2])
    sgd = SgdConfig(learning_rate=lr, batch_size=batch_size, epochs=epochs, seed=seed)
    return params, sgd, epoch
