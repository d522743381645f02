"""Model files (.tvm): JSON header followed by little-endian tensors.

Layout::

    8 bytes   magic b"TRVMODL\\0"
    uint32    format version
    uint32    byte length L of the JSON header
    L bytes   header: {"kind", "tensors": [{"name", "dtype", "shape"}, ...], ...}
    tensors   raw bytes in header order

Weights are float32; tree structure arrays are int32.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import cnn
from .forest import Forest, Tree
from .hog import HogParams
from .train import BaselineModel, CnnClassifier, ForestModel

MAGIC = b"TRVMODL\0"
VERSION = 1


def _pack(header: dict, tensors: list[tuple[str, np.ndarray]]) -> bytes:
    specs = []
    payload = []
    for name, arr in tensors:
        dt = np.dtype(arr.dtype).newbyteorder("<")
        specs.append({"name": name, "dtype": dt.str, "shape": list(arr.shape)})
        payload.append(np.ascontiguousarray(arr, dtype=dt).tobytes())
    header = dict(header, tensors=specs)
    blob = json.dumps(header, sort_keys=True).encode()
    return MAGIC + struct.pack("<II", VERSION, len(blob)) + blob + b"".join(payload)


def _unpack(raw: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if raw[:8] != MAGIC:
        raise ValueError("not a model file")
    version, n = struct.unpack("<II", raw[8:16])
    if version != VERSION:
        raise ValueError(f"unsupported model file version {version}")
    header = json.loads(raw[16:16 + n].decode())
    off = 16 + n
    tensors = {}
    for spec in header["tensors"]:
        dt = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"], dtype=np.int64))
        arr = np.frombuffer(raw, dtype=dt, count=count, offset=off).reshape(spec["shape"])
        tensors[spec["name"]] = arr.astype(dt.newbyteorder("="))
        off += count * dt.itemsize
    if off != len(raw):
        raise ValueError("model file has trailing or missing bytes")
    return header, tensors


def model_to_bytes(model) -> bytes:
    if isinstance(model, BaselineModel):
        return _pack({"kind": "baseline", "majority": model.majority,
                      "positive_fraction": model.positive_fraction}, [])
    if isinstance(model, ForestModel):
        tensors = []
        for i, t in enumerate(model.forest.trees):
            tensors += [
                (f"tree{i}.feature", t.feature.astype(np.int32)),
                (f"tree{i}.left", t.left.astype(np.int32)),
                (f"tree{i}.right", t.right.astype(np.int32)),
                (f"tree{i}.threshold", t.threshold.astype(np.float32)),
                (f"tree{i}.counts", t.counts.astype(np.float32)),
            ]
        header = {"kind": "rf", "n_trees": model.forest.n_trees, "seed": model.forest.seed,
                  "hog": asdict(model.hog), "side": model.side}
        return _pack(header, tensors)
    if isinstance(model, CnnClassifier):
        m = model.model
        header = {"kind": "cnn", "seed": m.seed, "input": [cnn.INPUT_SIDE, cnn.INPUT_SIDE, 1],
                  "architecture": "conv3x3x5-conv3x3x5-maxpool2-conv3x3x5-fc128-fc2-softmax",
                  "history": m.history}
        return _pack(header, [(k, m.params[k].astype(np.float32)) for k in cnn.PARAM_NAMES])
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_bytes(raw: bytes):
    header, t = _unpack(raw)
    kind = header["kind"]
    if kind == "baseline":
        return BaselineModel(int(header["majority"]), float(header["positive_fraction"]))
    if kind == "rf":
        trees = []
        for i in range(header["n_trees"]):
            trees.append(Tree(
                t[f"tree{i}.feature"].astype(np.intp),
                t[f"tree{i}.threshold"],
                t[f"tree{i}.left"].astype(np.intp),
                t[f"tree{i}.right"].astype(np.intp),
                t[f"tree{i}.counts"].astype(np.float64),
            ))
        hp = header["hog"]
        hog = HogParams(hp["orientations"], hp["cell_px"], hp["block_cells"], tuple(hp["block_stride"]))
        return ForestModel(Forest(trees, header["seed"]), hog, header["side"])
    if kind == "cnn":
        params = {k: t[k] for k in cnn.PARAM_NAMES}
        return CnnClassifier(cnn.CnnModel(params, header["seed"], header.get("history", {})))
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path):
    return model_from_bytes(Path(path).read_bytes())


def model_id(model) -> str:
    return hashlib.sha256(model_to_bytes(model)).hexdigest()[:16]
