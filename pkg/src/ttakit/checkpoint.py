"""Binary checkpoint persistence.

Layout (all integers little-endian):

    magic   4 bytes  b"TTAF"
    version u32      currently 1
    desc    u32 length + UTF-8 architecture descriptor
    count   u32      number of named arrays
    per array:
        name    u32 length + UTF-8
        dtype   u8   0 = float32, 1 = float64
        rank    u8
        extents rank * u64
        data    raw little-endian values

Arrays are written in model order: parameters first, then buffers.
Round-tripping a model reproduces every array bit-exactly.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .models import Model, build_model

__all__ = ["save_checkpoint", "load_checkpoint", "FORMAT_VERSION"]

MAGIC = b"TTAF"
FORMAT_VERSION = 1

_DTYPE_TAGS = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
_TAG_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def save_checkpoint(model: Model, path) -> None:
    path = Path(path)
    arrays = model.state_arrays()
    chunks = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    desc = model.descriptor.encode("utf-8")
    chunks.append(struct.pack("<I", len(desc)))
    chunks.append(desc)
    chunks.append(struct.pack("<I", len(arrays)))
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        tag = _DTYPE_TAGS.get(le.dtype)
        if tag is None:
            raise DataError(f"array {name!r} has unsupported dtype {arr.dtype}")
        nb = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<BB", tag, arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(le.tobytes())
    path.write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes, path: Path):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise DataError(
                f"{self.path}: truncated checkpoint at byte {self.pos} "
                f"(wanted {n} more bytes, file has {len(self.blob)})")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u8(self) -> int:
        return self.take(1)[0]


def _parse_descriptor(desc: str) -> tuple[str, tuple[int, ...], int]:
    m = re.fullmatch(r"([\w-]+)\|in=([\dx]+)\|k=(\d+)", desc)
    if m is None:
        raise DataError(f"unparseable architecture descriptor {desc!r}")
    in_shape = tuple(int(d) for d in m.group(2).split("x"))
    return m.group(1), in_shape, int(m.group(3))


def load_checkpoint(path) -> Model:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from e
    r = _Reader(blob, path)
    if r.take(4) != MAGIC:
        raise DataError(f"{path}: bad magic, not a checkpoint file")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise DataError(
            f"{path}: checkpoint format version {version}, expected {FORMAT_VERSION}")
    desc = r.take(r.u32()).decode("utf-8")
    arch, in_shape, k = _parse_descriptor(desc)
    count = r.u32()
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.take(r.u32()).decode("utf-8")
        tag = r.u8()
        if tag not in _TAG_DTYPES:
            raise DataError(f"{path}: unknown dtype tag {tag} at byte {r.pos - 1}")
        rank = r.u8()
        shape = struct.unpack(f"<{rank}Q", r.take(8 * rank))
        dtype = _TAG_DTYPES[tag]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if rank else dtype.itemsize
        data = np.frombuffer(r.take(nbytes), dtype=dtype).reshape(shape)
        arrays[name] = data.copy()

    model = build_model(arch, seed=0, in_shape=in_shape, num_classes=k)
    expected = set(model.state_arrays())
    got = set(arrays)
    if expected != got:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise DataError(
            f"{path}: array names do not match architecture {arch!r} "
            f"(missing {missing}, unexpected {extra})")
    try:
        model.load_state_arrays(arrays)
    except Exception as e:
        raise DataError(f"{path}: {e}") from e
    return model
