"""Binary dataset container.

Layout (little-endian)::

    8 bytes   magic b"TRVDSET\\0"
    uint32    format version
    uint32    byte length L of the JSON meta block
    L bytes   meta, UTF-8 JSON (includes n_records and patch_side)
    records   n_records x (pose: 3 x float64, label: uint8, patch: side*side x float32)
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .oracle import Dataset

MAGIC = b"TRVDSET\0"
VERSION = 1


def record_dtype(side: int) -> np.dtype:
    return np.dtype([("pose", "<f8", (3,)), ("label", "u1"), ("patch", "<f4", (side, side))])


def to_bytes(ds: Dataset) -> bytes:
    side = int(ds.patches.shape[1]) if len(ds) else int(ds.meta.get("patch_side", 60))
    meta = dict(ds.meta, n_records=len(ds), patch_side=side)
    blob = json.dumps(meta, sort_keys=True).encode()
    rec = np.zeros(len(ds), dtype=record_dtype(side))
    rec["pose"] = ds.poses
    rec["label"] = ds.labels
    rec["patch"] = ds.patches
    return MAGIC + struct.pack("<II", VERSION, len(blob)) + blob + rec.tobytes()


def save_dataset(ds: Dataset, path) -> None:
    Path(path).write_bytes(to_bytes(ds))


def load_dataset(path) -> Dataset:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a dataset file")
    version, n = struct.unpack("<II", raw[8:16])
    if version != VERSION:
        raise ValueError(f"{path}: unsupported dataset version {version}")
    meta = json.loads(raw[16:16 + n].decode())
    side = int(meta["patch_side"])
    count = int(meta["n_records"])
    dt = record_dtype(side)
    body = raw[16 + n:]
    if len(body) != count * dt.itemsize:
        raise ValueError(f"{path}: header says {count} records, payload holds {len(body) / dt.itemsize:g}")
    rec = np.frombuffer(body, dtype=dt, count=count)
    return Dataset(rec["patch"].copy(), rec["pose"].copy(), rec["label"].copy(), meta)
