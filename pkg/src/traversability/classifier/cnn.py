"""Small convolutional network for 60x60 height patches, written on numpy.

Layer stack (valid padding, stride 1):

    input 1x60x60
    conv3x3 -> 5x58x58, ReLU
    conv3x3 -> 5x56x56, ReLU
    maxpool2x2 -> 5x28x28
    conv3x3 -> 5x26x26, ReLU
    flatten 3380 -> dense 128, ReLU
    dense 2 -> softmax

Class index 0 is non-traversable, index 1 is traversable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

INPUT_SIDE = 60
N_MAPS = 5
HIDDEN = 128
N_CLASSES = 2

PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4", "w5", "b5")


def param_shapes(side: int = INPUT_SIDE) -> dict[str, tuple[int, ...]]:
    s3 = (side - 4) // 2 - 2
    flat = N_MAPS * s3 * s3
    return {
        "w1": (N_MAPS, 1, 3, 3),
        "b1": (N_MAPS,),
        "w2": (N_MAPS, N_MAPS, 3, 3),
        "b2": (N_MAPS,),
        "w3": (N_MAPS, N_MAPS, 3, 3),
        "b3": (N_MAPS,),
        "w4": (flat, HIDDEN),
        "b4": (HIDDEN,),
        "w5": (HIDDEN, N_CLASSES),
        "b5": (N_CLASSES,),
    }


@dataclass
class CnnModel:
    params: dict[str, np.ndarray]
    seed: int = 0
    history: dict[str, list[float]] = field(default_factory=dict)

    @property
    def side(self) -> int:
        return INPUT_SIDE

    @classmethod
    def init(cls, seed: int = 0, dtype=np.float32) -> "CnnModel":
        """Uniform fan-in scaled weights, zero biases."""
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in param_shapes().items():
            if name.startswith("b"):
                params[name] = np.zeros(shape, dtype=dtype)
                continue
            fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
            limit = math.sqrt(6.0 / fan_in)
            params[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
        return cls(params=params, seed=seed)

    @classmethod
    def zeros(cls, dtype=np.float64) -> "CnnModel":
        return cls(params={k: np.zeros(s, dtype=dtype) for k, s in param_shapes().items()})

    def astype(self, dtype) -> "CnnModel":
        return CnnModel({k: v.astype(dtype) for k, v in self.params.items()}, self.seed, dict(self.history))

    def predict_proba(self, patches: np.ndarray) -> np.ndarray:
        """Probability of the traversable class for a (N, 60, 60) stack."""
        return predict_proba(self, patches)


def _im2col(x: np.ndarray) -> np.ndarray:
    # x: (C, B, H, W) -> cols (C*9, B*H'*W')
    c, bsz, h, w = x.shape
    ho, wo = h - 2, w - 2
    cols = np.empty((c, 3, 3, bsz, ho, wo), dtype=x.dtype)
    for i in range(3):
        for j in range(3):
            cols[:, i, j] = x[:, :, i:i + ho, j:j + wo]
    return cols.reshape(c * 9, -1)


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cols = _im2col(x)
    _, bsz, h, wd = x.shape
    out = w.reshape(w.shape[0], -1) @ cols + b[:, None]
    return out.reshape(w.shape[0], bsz, h - 2, wd - 2), cols


def _conv_backward(dout: np.ndarray, cols: np.ndarray, w: np.ndarray, need_dx: bool):
    o, bsz, ho, wo = dout.shape
    d2 = dout.reshape(o, -1)
    dw = (d2 @ cols.T).reshape(w.shape)
    db = d2.sum(axis=1)
    if not need_dx:
        return None, dw, db
    c = w.shape[1]
    dcols = (w.reshape(o, -1).T @ d2).reshape(c, 3, 3, bsz, ho, wo)
    dx = np.zeros((c, bsz, ho + 2, wo + 2), dtype=dout.dtype)
    for i in range(3):
        for j in range(3):
            dx[:, :, i:i + ho, j:j + wo] += dcols[:, i, j]
    return dx, dw, db


def _pool_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c, bsz, h, w = x.shape
    blocks = x.reshape(c, bsz, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(c, bsz, h // 2, w // 2, 4)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]
    return out, arg


def _pool_backward(dout: np.ndarray, arg: np.ndarray) -> np.ndarray:
    c, bsz, h2, w2 = dout.shape
    blocks = np.zeros((c, bsz, h2, w2, 4), dtype=dout.dtype)
    np.put_along_axis(blocks, arg[..., None], dout[..., None], axis=-1)
    return blocks.reshape(c, bsz, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(c, bsz, h2 * 2, w2 * 2)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: CnnModel, x: np.ndarray, keep: bool = False):
    """Batched forward pass on (B, 60, 60) input; returns class probabilities (B, 2).

    With ``keep=True`` the intermediate activations needed for backprop are
    returned alongside.
    """
    p = model.params
    if x.ndim != 3 or x.shape[1:] != (INPUT_SIDE, INPUT_SIDE):
        raise ValueError(f"expected (N, {INPUT_SIDE}, {INPUT_SIDE}) input, got {x.shape}")
    # activations are kept channel-major: (C, B, H, W)
    x = x.astype(p["w1"].dtype, copy=False)[None]
    z1, c1 = _conv_forward(x, p["w1"], p["b1"])
    a1 = np.maximum(z1, 0)
    z2, c2 = _conv_forward(a1, p["w2"], p["b2"])
    a2 = np.maximum(z2, 0)
    m, arg = _pool_forward(a2)
    z3, c3 = _conv_forward(m, p["w3"], p["b3"])
    a3 = np.maximum(z3, 0)
    flat = a3.transpose(1, 0, 2, 3).reshape(a3.shape[1], -1)
    z4 = flat @ p["w4"] + p["b4"]
    a4 = np.maximum(z4, 0)
    z5 = a4 @ p["w5"] + p["b5"]
    probs = _softmax(z5)
    if not keep:
        return probs
    cache = dict(c1=c1, z1=z1, c2=c2, z2=z2, arg=arg, c3=c3, z3=z3, flat=flat, z4=z4, a4=a4)
    return probs, cache


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(len(labels)), labels]
    tiny = np.finfo(probs.dtype).tiny
    return float(-np.mean(np.log(np.maximum(picked, tiny))))


def loss_and_gradients(model: CnnModel, x: np.ndarray, labels: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean categorical cross-entropy over the batch and its exact gradients."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        raise ValueError("empty batch")
    p = model.params
    probs, c = forward(model, x, keep=True)
    loss = cross_entropy(probs, labels)
    n = len(labels)
    dz5 = probs.copy()
    dz5[np.arange(n), labels] -= 1
    dz5 /= n
    g = {"w5": c["a4"].T @ dz5, "b5": dz5.sum(axis=0)}
    dz4 = (dz5 @ p["w5"].T) * (c["z4"] > 0)
    g["w4"] = c["flat"].T @ dz4
    g["b4"] = dz4.sum(axis=0)
    z3 = c["z3"]
    dz3 = (dz4 @ p["w4"].T).reshape(z3.shape[1], z3.shape[0], *z3.shape[2:]).transpose(1, 0, 2, 3) * (z3 > 0)
    dm, g["w3"], g["b3"] = _conv_backward(dz3, c["c3"], p["w3"], True)
    dz2 = _pool_backward(dm, c["arg"]) * (c["z2"] > 0)
    da1, g["w2"], g["b2"] = _conv_backward(dz2, c["c2"], p["w2"], True)
    dz1 = da1 * (c["z1"] > 0)
    _, g["w1"], g["b1"] = _conv_backward(dz1, c["c1"], p["w1"], False)
    return loss, g


# Inference runs in fixed-size, zero-padded chunks so a patch gets the same
# floating-point result whether it is scored alone or inside a large batch.
PREDICT_CHUNK = 64


def predict_proba(model: CnnModel, patches: np.ndarray) -> np.ndarray:
    patches = np.asarray(patches)
    if patches.ndim == 2:
        patches = patches[None]
    n = len(patches)
    out = np.empty(n, dtype=np.float64)
    dtype = model.params["w1"].dtype
    for start in range(0, n, PREDICT_CHUNK):
        chunk = np.zeros((PREDICT_CHUNK, INPUT_SIDE, INPUT_SIDE), dtype=dtype)
        part = patches[start:start + PREDICT_CHUNK]
        chunk[: len(part)] = part
        out[start:start + len(part)] = forward(model, chunk)[: len(part), 1]
    return out
