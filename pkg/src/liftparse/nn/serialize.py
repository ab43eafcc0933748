"""Flat binary checkpoint format for named float64 arrays.

Layout: 8-byte little-endian header length, a JSON header describing
every array (name, shape, byte offset) plus free-form metadata, then the
raw array bytes in order.  Arrays are always float64, little-endian, C
order, so the file is portable and diffable with a hex dump.
"""
from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = "liftparse-params"
FORMAT_VERSION = 1


def save_params(path, arrays: dict[str, np.ndarray], meta: "dict | None" = None) -> None:
    entries = []
    offset = 0
    blobs = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        raw = arr.tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    header = {
        "magic": MAGIC,
        "format_version": FORMAT_VERSION,
        "meta": meta or {},
        "arrays": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for raw in blobs:
            fh.write(raw)


def load_params(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("magic") != MAGIC:
            raise ValueError(f"not a parameter file: {path}")
        body = fh.read()
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=start)
        arrays[entry["name"]] = arr.reshape(shape).astype(np.float64)
    return arrays, header.get("meta", {})
