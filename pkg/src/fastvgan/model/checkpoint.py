"""Versioned binary checkpoint container.

Layout::

    FASTVGAN-CKPT v1\\n
    meta <json>\\n                          (single line, UTF-8)
    <name> <rank> <d1> ... <dk>\\n          (one record per array)
    <prod(d) little-endian float32 values>

Arrays are written in insertion order, so saving what was loaded
reproduces the file byte for byte.
"""

from __future__ import annotations

import json
from collections import OrderedDict

import numpy as np

__all__ = ["HEADER", "save_checkpoint", "load_checkpoint", "CheckpointError"]

HEADER = b"FASTVGAN-CKPT v1\n"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, arrays, meta=None):
    """Write ``arrays`` (ordered name -> ndarray) and a JSON-able ``meta`` dict."""
    chunks = [HEADER, b"meta " + json.dumps(meta or {}, sort_keys=True).encode("utf-8") + b"\n"]
    for name, arr in arrays.items():
        if any(c.isspace() for c in name) or not name:
            raise CheckpointError(f"invalid record name {name!r}")
        arr = np.asarray(arr)
        dims = " ".join(str(d) for d in arr.shape)
        line = f"{name} {arr.ndim}" + (f" {dims}" if arr.ndim else "") + "\n"
        chunks.append(line.encode("utf-8"))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    with open(path, "wb") as f:
        f.write(b"".join(chunks))


def load_checkpoint(path):
    """Return ``(arrays, meta)``; arrays come back as float32."""
    with open(path, "rb") as f:
        buf = f.read()
    if not buf.startswith(HEADER):
        raise CheckpointError(f"{path}: not a FASTVGAN-CKPT v1 file")
    pos = len(HEADER)
    end = buf.index(b"\n", pos)
    line = buf[pos:end].decode("utf-8")
    if not line.startswith("meta "):
        raise CheckpointError(f"{path}: missing metadata line")
    meta = json.loads(line[5:])
    pos = end + 1
    arrays = OrderedDict()
    while pos < len(buf):
        end = buf.find(b"\n", pos)
        if end < 0:
            raise CheckpointError(f"{path}: truncated record header at byte {pos}")
        fields = buf[pos:end].decode("utf-8").split()
        try:
            name, rank = fields[0], int(fields[1])
            shape = tuple(int(d) for d in fields[2 : 2 + rank])
        except (IndexError, ValueError):
            raise CheckpointError(f"{path}: malformed record header {buf[pos:end]!r}") from None
        if len(shape) != rank or len(fields) != 2 + rank:
            raise CheckpointError(f"{path}: record {name!r} rank/dims mismatch")
        pos = end + 1
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        if pos + nbytes > len(buf):
            raise CheckpointError(f"{path}: record {name!r} truncated")
        arrays[name] = np.frombuffer(buf, dtype="<f4", count=nbytes // 4, offset=pos).reshape(shape).copy()
        pos += nbytes
    return arrays, meta
