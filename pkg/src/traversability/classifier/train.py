"""Training and evaluation for the three patch classifiers."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from ..oracle import Dataset
from . import cnn
from .forest import Forest, fit_forest
from .hog import HogParams, hog_many

log = logging.getLogger(__name__)

# Chunked, zero-padded inference keeps per-patch outputs independent of how
# many patches are scored together.
CHUNK = cnn.PREDICT_CHUNK


@dataclass
class BaselineModel:
    """Always answers the majority class of its training set (ties -> traversable)."""

    majority: int
    positive_fraction: float = float("nan")

    kind = "baseline"

    def predict_proba(self, patches: np.ndarray) -> np.ndarray:
        n = 1 if np.ndim(patches) == 2 else len(patches)
        return np.full(n, float(self.majority))


@dataclass
class ForestModel:
    forest: Forest
    hog: HogParams = field(default_factory=HogParams)
    side: int = 60

    kind = "rf"

    def predict_proba(self, patches: np.ndarray) -> np.ndarray:
        patches = np.asarray(patches)
        if patches.ndim == 2:
            patches = patches[None]
        if patches.shape[1:] != (self.side, self.side):
            raise ValueError(f"model expects {self.side}x{self.side} patches, got {patches.shape[1:]}")
        out = np.empty(len(patches))
        for start in range(0, len(patches), CHUNK):
            out[start:start + CHUNK] = self.forest.predict_proba(hog_many(patches[start:start + CHUNK], self.hog))
        return out


@dataclass
class CnnClassifier:
    model: cnn.CnnModel

    kind = "cnn"

    @property
    def history(self) -> dict:
        return self.model.history

    def predict_proba(self, patches: np.ndarray) -> np.ndarray:
        return cnn.predict_proba(self.model, patches)


def predict_proba(model, patches: np.ndarray) -> np.ndarray:
    return model.predict_proba(patches)


# --------------------------------------------------------------------------- training


def baseline_train(ds: Dataset) -> BaselineModel:
    if len(ds) == 0:
        raise ValueError("empty dataset")
    frac = float(np.mean(ds.labels))
    return BaselineModel(1 if frac >= 0.5 else 0, frac)


def rf_train(ds: Dataset, params: HogParams = HogParams(), n_trees: int = 10, seed: int = 0,
             min_leaf: int = 5) -> ForestModel:
    if len(ds) == 0:
        raise ValueError("empty dataset")
    X = hog_many(ds.patches, params)
    forest = fit_forest(X, ds.labels, n_trees=n_trees, seed=seed, min_leaf=min_leaf)
    return ForestModel(forest, params, int(ds.patches.shape[1]))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    rho: float = 0.95
    epsilon: float = 1e-6
    learning_rate: float = 1.0
    validation_fraction: float = 0.1
    seed: int = 0
    # flip each training patch across its heading axis with probability 1/2;
    # the footprint oracle is left-right symmetric, so labels are preserved
    mirror: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


class Adadelta:
    """Adadelta with running averages of squared gradients and squared updates."""

    def __init__(self, params: dict[str, np.ndarray], rho: float = 0.95, eps: float = 1e-6, lr: float = 1.0):
        self.rho = rho
        self.eps = eps
        self.lr = lr
        self.sq_grad = {k: np.zeros_like(v) for k, v in params.items()}
        self.sq_delta = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        rho, eps = self.rho, self.eps
        for k, g in grads.items():
            acc = self.sq_grad[k]
            acc *= rho
            acc += (1 - rho) * g * g
            delta = np.sqrt(self.sq_delta[k] + eps) / np.sqrt(acc + eps) * g
            params[k] -= self.lr * delta
            self.sq_delta[k] *= rho
            self.sq_delta[k] += (1 - rho) * delta * delta


def _split(n: int, cfg: TrainConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(n)
    n_val = int(round(n * cfg.validation_fraction))
    if n_val >= n:
        n_val = n - 1
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _mean_loss(model: cnn.CnnModel, x: np.ndarray, y: np.ndarray, batch: int = 512) -> float:
    total = 0.0
    for s in range(0, len(y), batch):
        probs = cnn.forward(model, x[s:s + batch])
        total += cnn.cross_entropy(probs, y[s:s + batch]) * len(y[s:s + batch])
    return total / len(y)


def cnn_train(ds: Dataset, cfg: TrainConfig = TrainConfig(), callback=None) -> CnnClassifier:
    """Mini-batch Adadelta on mean cross-entropy. Deterministic in ``cfg.seed``."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    train_idx, val_idx = _split(len(ds), cfg, rng)
    model = cnn.CnnModel.init(seed=cfg.seed)
    opt = Adadelta(model.params, cfg.rho, cfg.epsilon, cfg.learning_rate)
    x = ds.patches
    y = ds.labels.astype(np.int64)
    xt, yt = x[train_idx], y[train_idx]
    xv, yv = x[val_idx], y[val_idx]
    hist = {"initial_train_loss": _mean_loss(model, xt, yt), "train_loss": [], "val_loss": []}
    if len(yv):
        hist["initial_val_loss"] = _mean_loss(model, xv, yv)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(yt))
        losses, weights = [], []
        for s in range(0, len(order), cfg.batch_size):
            b = order[s:s + cfg.batch_size]
            xb = xt[b]
            if cfg.mirror:
                flip = rng.random(len(b)) < 0.5
                xb = np.where(flip[:, None, None], xb[:, ::-1, :], xb)
            loss, grads = cnn.loss_and_gradients(model, xb, yt[b])
            opt.step(model.params, grads)
            losses.append(loss)
            weights.append(len(b))
        hist["train_loss"].append(float(np.average(losses, weights=weights)))
        if len(yv):
            hist["val_loss"].append(_mean_loss(model, xv, yv))
        log.info("epoch %d/%d train %.4f val %s", epoch + 1, cfg.epochs, hist["train_loss"][-1],
                 f"{hist['val_loss'][-1]:.4f}" if len(yv) else "-")
        if callback is not None:
            callback(epoch, model, hist)
    hist["config"] = asdict(cfg)
    hist["validation_indices_count"] = int(len(val_idx))
    model.history = hist
    return CnnClassifier(model)


def validation_split(ds: Dataset, cfg: TrainConfig) -> tuple[Dataset, Dataset]:
    """The same train/validation split ``cnn_train`` uses for this config."""
    tr, va = _split(len(ds), cfg, np.random.default_rng(cfg.seed))
    return ds.subset(tr), ds.subset(va)


# --------------------------------------------------------------------------- evaluation


@dataclass
class EvalReport:
    accuracy: float
    auc: float | None
    tp: int
    tn: int
    fp: int
    fn: int
    n_samples: int
    positive_fraction: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self) -> str:
        auc = "n/a" if self.auc is None else f"{self.auc:.3f}"
        rows = [
            ("samples", str(self.n_samples)),
            ("positive fraction", f"{self.positive_fraction:.3f}"),
            ("ACC", f"{self.accuracy:.3f}"),
            ("AUC", auc),
            ("TP / FP", f"{self.tp} / {self.fp}"),
            ("TN / FN", f"{self.tn} / {self.fn}"),
        ]
        w = max(len(r[0]) for r in rows)
        return "\n".join(f"{k:<{w}}  {v}" for k, v in rows)


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float | None:
    """Mann-Whitney rank statistic; tied scores count one half. None with a single class."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def report_from_scores(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> EvalReport:
    labels = np.asarray(labels).astype(bool)
    if len(labels) == 0:
        raise ValueError("empty dataset")
    pred = np.asarray(scores) >= threshold
    tp = int(np.sum(pred & labels))
    tn = int(np.sum(~pred & ~labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    n = len(labels)
    return EvalReport((tp + tn) / n, roc_auc(scores, labels), tp, tn, fp, fn, n, float(labels.mean()))


def evaluate(model, ds: Dataset) -> EvalReport:
    if len(ds) == 0:
        raise ValueError("empty dataset")
    return report_from_scores(model.predict_proba(ds.patches), ds.labels)
