"""Binary checkpoint container for networks and optimizer state.

Layout (little-endian throughout):
  magic "DDZCKPT1" (8 bytes)
  u32 header length, then UTF-8 JSON header:
      {"arch": {...}, "dtype": "float32", "step": int,
       "rng_state": [...u64] | null, "tensors": [[name, shape, dtype], ...]}
  tensor payloads in header order, raw little-endian arrays
  u64 CRC32 of everything before it (zero-extended)
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from .networks import Network, RMSProp

MAGIC = b"DDZCKPT1"


class CorruptCheckpoint(ValueError):
    pass


class ArchMismatch(ValueError):
    pass


def _tensor_entries(net: Network, optimizer: RMSProp | None):
    entries = [(f"param.{i}", p) for i, p in enumerate(net.params())]
    if optimizer is not None:
        entries += [(f"rms.{i}", s)
                    for i, s in enumerate(optimizer.state_tensors())]
    return entries


def save(path, net: Network, optimizer: RMSProp | None = None,
         step: int = 0, rng_state=None):
    entries = _tensor_entries(net, optimizer)
    header = {
        "arch": net.arch,
        "dtype": net.dtype.name,
        "step": int(step),
        "rng_state": list(rng_state) if rng_state is not None else None,
        "tensors": [[name, list(t.shape), str(t.dtype)]
                    for name, t in entries],
    }
    blob = json.dumps(header).encode("utf-8")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", len(blob))
    out += blob
    for _, t in entries:
        out += np.ascontiguousarray(t, dtype=t.dtype).astype(
            t.dtype.newbyteorder("<")).tobytes()
    out += struct.pack("<Q", zlib.crc32(out))
    with open(path, "wb") as fh:
        fh.write(out)


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 20 or raw[:8] != MAGIC:
        raise CorruptCheckpoint("bad magic")
    (crc,) = struct.unpack("<Q", raw[-8:])
    if crc != zlib.crc32(raw[:-8]):
        raise CorruptCheckpoint("checksum mismatch")
    (hlen,) = struct.unpack("<I", raw[8:12])
    try:
        header = json.loads(raw[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint("unreadable header") from exc
    header["_payload"] = raw[12 + hlen:-8]
    return header


def load(path, expect_arch: dict | None = None,
         with_optimizer: bool = False, lr=1e-4):
    """Rebuild (net, optimizer|None, step, rng_state) from a checkpoint."""
    header = read_header(path)
    arch = header["arch"]
    if expect_arch is not None and expect_arch != arch:
        raise ArchMismatch(f"checkpoint holds {arch}, expected {expect_arch}")
    net = Network(arch, seed=0, dtype=np.dtype(header["dtype"]))
    optimizer = RMSProp(net, lr=lr) if with_optimizer else None

    tensors = {}
    offset = 0
    payload = header["_payload"]
    for name, shape, dtype in header["tensors"]:
        dt = np.dtype(dtype).newbyteorder("<")
        n = int(np.prod(shape)) if shape else 1
        nbytes = n * dt.itemsize
        chunk = payload[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise CorruptCheckpoint("truncated tensor payload")
        tensors[name] = np.frombuffer(chunk, dtype=dt).reshape(shape)
        offset += nbytes
    if offset != len(payload):
        raise CorruptCheckpoint("trailing bytes in payload")

    for i, p in enumerate(net.params()):
        src = tensors.get(f"param.{i}")
        if src is None or src.shape != p.shape:
            raise CorruptCheckpoint(f"missing or misshaped tensor param.{i}")
        p[...] = src
    if optimizer is not None:
        for i, s in enumerate(optimizer.state_tensors()):
            src = tensors.get(f"rms.{i}")
            if src is not None:
                s[...] = src
    return net, optimizer, header["step"], header["rng_state"]
