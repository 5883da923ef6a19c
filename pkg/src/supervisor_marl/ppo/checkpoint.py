"""Binary checkpoint holding an actor and a critic network.

Layout (all integers little-endian ``uint32``)::

    magic        8 bytes   b"SUPMARL\\x00"
    version      uint32    FORMAT_VERSION
    networks     uint32    number of networks (2: actor, critic)
    per network: uint32 layer count L, then L+1 uint32 layer sizes
    digest       32 bytes  SHA-256 of the task description the nets were built for
    payload      float64   little-endian; per network, per layer: W (row-major), b
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..errors import CheckpointError
from .network import DenseNetwork

MAGIC = b"SUPMARL\x00"
FORMAT_VERSION = 1


def digest_of(description: str) -> bytes:
    return hashlib.sha256(description.encode("utf-8")).digest()


def save_checkpoint(path: Union[str, Path], networks: Sequence[DenseNetwork], digest: bytes) -> None:
    if len(digest) != 32:
        raise CheckpointError("digest must be 32 bytes")
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(networks))]
    for net in networks:
        parts.append(struct.pack("<I", len(net.sizes) - 1))
        parts.append(struct.pack(f"<{len(net.sizes)}I", *net.sizes))
    parts.append(digest)
    for net in networks:
        for p in net.params():
            parts.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_checkpoint(path: Union[str, Path]) -> Tuple[List[Tuple[int, ...]], bytes, List[List[np.ndarray]]]:
    """Parse a checkpoint into (layer sizes per network, digest, parameter arrays)."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    try:
        version, count = struct.unpack_from("<II", data, 8)
        if version != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported format version {version}")
        off = 16
        shapes = []
        for _ in range(count):
            (layers,) = struct.unpack_from("<I", data, off)
            off += 4
            shapes.append(struct.unpack_from(f"<{layers + 1}I", data, off))
            off += 4 * (layers + 1)
        digest = data[off:off + 32]
        off += 32
    except struct.error:
        raise CheckpointError(f"{path}: truncated header") from None

    params: List[List[np.ndarray]] = []
    for sizes in shapes:
        arrays = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            for shape in ((fan_in, fan_out), (fan_out,)):
                nbytes = 8 * int(np.prod(shape))
                if off + nbytes > len(data):
                    raise CheckpointError(f"{path}: truncated payload")
                arrays.append(np.frombuffer(data, dtype="<f8", count=nbytes // 8, offset=off)
                              .reshape(shape).astype(np.float64))
                off += nbytes
        params.append(arrays)
    if off != len(data):
        raise CheckpointError(f"{path}: {len(data) - off} trailing bytes")
    return [tuple(s) for s in shapes], digest, params


def load_checkpoint(path: Union[str, Path], networks: Sequence[DenseNetwork], digest: bytes) -> None:
    """Load parameters into ``networks`` after validating shapes and digest."""
    shapes, found, params = read_checkpoint(path)
    if len(shapes) != len(networks):
        raise CheckpointError(f"{path}: holds {len(shapes)} networks, expected {len(networks)}")
    for net, sizes in zip(networks, shapes):
        if tuple(net.sizes) != sizes:
            raise CheckpointError(f"{path}: layer sizes {sizes} do not match {net.sizes}")
    if found != digest:
        raise CheckpointError(f"{path}: checkpoint was trained for a different task configuration")
    for net, arrays in zip(networks, params):
        for dst, src in zip(net.params(), arrays):
            dst[...] = src
