"""Fully connected regression network for transfer-time prediction.

Plain numpy: forward pass, exact backpropagation of the batch mean squared
error, mini-batch gradient descent with an exponentially decaying learning
rate, plus an ordinary-least-squares baseline sharing the same metrics.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .astro import FEATURE_KINDS, make_rng

log = logging.getLogger(__name__)

MODEL_FORMAT = "sailtour-mlp"
MODEL_VERSION = 1
LABEL_SCALE = 100.0  # days per internal label unit
LOCAL_LIMIT_DAYS = 300.0
DIVERGENCE_LOSS = 1e6
HISTORY_HEADER = ["epoch", "lr", "train_loss", "val_loss", "val_accuracy", "val_local_accuracy", "val_mae"]


class TrainingDiverged(RuntimeError):
    pass


class ModelFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# activations: value and derivative expressed through the activation output


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _sigmoid_d(a):
    return a * (1.0 - a)


def _tanh_d(a):
    return 1.0 - a * a


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_d(a):
    return (a > 0.0).astype(a.dtype)


ACTIVATIONS = {
    "sigmoid": (_sigmoid, _sigmoid_d),
    "tanh": (np.tanh, _tanh_d),
    "relu": (_relu, _relu_d),
}


@dataclass
class MlpModel:
    layer_sizes: list
    weights: list  # weights[k] has shape (layer_sizes[k], layer_sizes[k+1])
    biases: list
    activation: str = "sigmoid"
    feature_kind: str = "COE"
    x_mean: np.ndarray | None = None
    x_scale: np.ndarray | None = None
    y_offset: float = 0.0
    y_scale: float = LABEL_SCALE

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.feature_kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.feature_kind!r}")
        sizes = list(self.layer_sizes)
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("one weight matrix and bias vector per layer transition required")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (sizes[k], sizes[k + 1]) or b.shape != (sizes[k + 1],):
                raise ValueError(f"layer {k}: weight shape {W.shape} / bias {b.shape} do not chain "
                                 f"with sizes {sizes[k]} -> {sizes[k + 1]}")
        n_in = sizes[0]
        if self.x_mean is None:
            self.x_mean = np.zeros(n_in)
        if self.x_scale is None:
            self.x_scale = np.ones(n_in)
        if np.any(self.x_scale <= 0.0) or not self.y_scale > 0.0:
            raise ValueError("scalers must be invertible (positive scales)")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    def params(self) -> list:
        """Flat view order: W0, b0, W1, b1, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def copy(self) -> "MlpModel":
        return replace(self, weights=[W.copy() for W in self.weights], biases=[b.copy() for b in self.biases],
                       x_mean=self.x_mean.copy(), x_scale=self.x_scale.copy())


def init_model(n_inputs: int, hidden, activation: str = "sigmoid", seed=0, feature_kind: str = "COE") -> MlpModel:
    """Glorot-uniform weights, zero biases, identity scalers."""
    sizes = [n_inputs, *hidden, 1]
    rng = make_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases, activation, feature_kind)


def parse_layers(spec: str) -> list:
    """'3x60' -> [60, 60, 60]; '60,40' -> [60, 40]."""
    spec = spec.strip().lower()
    if "x" in spec:
        n, u = spec.split("x", 1)
        return [int(u)] * int(n)
    return [int(s) for s in spec.split(",") if s]


def fit_scaler(model: MlpModel, X: np.ndarray) -> MlpModel:
    """Per-feature standardization fitted on ``X`` (the training inputs)."""
    X = np.asarray(X, dtype=float)
    sd = X.std(axis=0)
    sd[sd < 1e-12] = 1.0
    return replace(model, x_mean=X.mean(axis=0), x_scale=sd)


def fit_label_scaler(model: MlpModel, y_days) -> MlpModel:
    """Train on standardized labels; the output layer then starts at the mean."""
    y = np.asarray(y_days, dtype=float)
    sd = float(y.std())
    return replace(model, y_offset=float(y.mean()), y_scale=sd if sd > 1e-12 else LABEL_SCALE)


# ---------------------------------------------------------------------------
# forward / backward


def _check(model: MlpModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.n_inputs:
        raise ValueError(f"expected features of length {model.n_inputs}, got shape {X.shape}")
    return X


def _activations(model: MlpModel, Z):
    """Layer outputs for standardized inputs ``Z``; the output layer is linear."""
    act = ACTIVATIONS[model.activation][0]
    outs = [Z]
    a = Z
    last = len(model.weights) - 1
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W + b
        a = z if k == last else act(z)
        outs.append(a)
    return outs


def forward_scaled(model: MlpModel, X) -> np.ndarray:
    X = _check(model, X)
    return _activations(model, (X - model.x_mean) / model.x_scale)[-1][:, 0]


def forward(model: MlpModel, X) -> np.ndarray:
    """Predicted transfer times in days."""
    return model.y_offset + model.y_scale * forward_scaled(model, X)


def predict_one(model: MlpModel, x) -> float:
    return float(forward(model, x)[0])


def batch_loss(model: MlpModel, X, y_days) -> float:
    """Mean squared error in internal label units ((days - y_offset) / y_scale)."""
    t = (np.asarray(y_days, dtype=float) - model.y_offset) / model.y_scale
    r = forward_scaled(model, X) - t
    return float(np.mean(r * r))


def gradient(model: MlpModel, X, y_days):
    """Backpropagated gradient of :func:`batch_loss`; returns (loss, [dW0, db0, dW1, db1, ...])."""
    X = _check(model, X)
    y_days = np.asarray(y_days, dtype=float)
    if y_days.shape != (X.shape[0],):
        raise ValueError("one label per feature row required")
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    dact = ACTIVATIONS[model.activation][1]
    outs = _activations(model, (X - model.x_mean) / model.x_scale)
    n = X.shape[0]
    t = (y_days - model.y_offset) / model.y_scale
    r = outs[-1][:, 0] - t
    loss = float(np.mean(r * r))
    delta = (2.0 / n) * r[:, None]
    grads = [None] * (2 * len(model.weights))
    for k in range(len(model.weights) - 1, -1, -1):
        grads[2 * k] = outs[k].T @ delta
        grads[2 * k + 1] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ model.weights[k].T) * dact(outs[k])
    return loss, grads


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class Metrics:
    loss: float  # mean squared error, days^2
    accuracy: float
    local_accuracy: float
    mae_days: float
    n: int = 0
    n_local: int = 0

    def as_dict(self) -> dict:
        return {"loss": self.loss, "accuracy": self.accuracy, "local_accuracy": self.local_accuracy,
                "mae_days": self.mae_days, "n": self.n, "n_local": self.n_local}


def metrics_from_predictions(y, f, local_limit: float = LOCAL_LIMIT_DAYS) -> Metrics:
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.size == 0:
        raise ValueError("cannot evaluate an empty set")
    if np.any(y <= 0.0):
        raise ValueError("labels must be positive for the percentage accuracy")
    err = np.abs(y - f)
    rel = err / y
    local = y < local_limit
    return Metrics(
        loss=float(np.mean((y - f) ** 2)),
        accuracy=float(1.0 - rel.mean()),
        local_accuracy=float(1.0 - rel[local].mean()) if local.any() else math.nan,
        mae_days=float(err.mean()),
        n=int(y.size),
        n_local=int(local.sum()),
    )


def evaluate(model: MlpModel, X, y) -> Metrics:
    return metrics_from_predictions(y, forward(model, X))


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 200
    initial_lr: float = 0.01
    decay: float = 0.98
    epochs: int = 5000
    seed: int = 0
    optimizer: str = "gd"
    eval_every: int = 1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("decay must lie in (0, 1]")
        if not self.initial_lr > 0.0:
            raise ValueError("initial_lr must be positive")
        if self.optimizer != "gd":
            raise ValueError("only plain gradient descent ('gd') is supported")


def learning_rate(epoch: int, initial_lr: float = 0.01, decay: float = 0.98) -> float:
    return initial_lr * decay ** (epoch / 200.0)


@dataclass
class History:
    rows: list = field(default_factory=list)

    def append(self, **row):
        self.rows.append(row)

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def save_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HISTORY_HEADER)
            for r in self.rows:
                w.writerow([r["epoch"]] + [repr(float(r[k])) for k in HISTORY_HEADER[1:]])


def train(model: MlpModel, X_train, y_train, X_val, y_val, config: TrainConfig, callback=None):
    """Mini-batch gradient descent; the training set is reshuffled every epoch.

    Input and label scalers are fitted on the training set here.  Raises
    :class:`TrainingDiverged` when the loss blows up or turns non-finite.
    """
    X_train = _check(model, X_train)
    y_train = np.asarray(y_train, dtype=float)
    X_val = _check(model, X_val)
    y_val = np.asarray(y_val, dtype=float)
    model = fit_label_scaler(fit_scaler(model.copy(), X_train), y_train)
    rng = make_rng(config.seed)
    n = X_train.shape[0]
    hist = History()
    params = model.params()
    for epoch in range(config.epochs):
        lr = learning_rate(epoch, config.initial_lr, config.decay)
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            loss, grads = gradient(model, X_train[idx], y_train[idx])
            if not math.isfinite(loss) or loss > DIVERGENCE_LOSS:
                raise TrainingDiverged(
                    f"loss {loss:.3g} at epoch {epoch} with learning rate {lr:.3g}; "
                    f"retry with a smaller initial learning rate (e.g. {config.initial_lr / 3:.3g})")
            for p, g in zip(params, grads):
                p -= lr * g
        last = epoch == config.epochs - 1
        if last or epoch % config.eval_every == 0:
            tr = evaluate(model, X_train, y_train)
            va = evaluate(model, X_val, y_val)
            if not math.isfinite(tr.loss):
                raise TrainingDiverged(f"non-finite training loss at epoch {epoch}")
            hist.append(epoch=epoch, lr=lr, train_loss=tr.loss, val_loss=va.loss, val_accuracy=va.accuracy,
                        val_local_accuracy=va.local_accuracy, val_mae=va.mae_days)
            if callback is not None:
                callback(epoch, tr, va)
    return model, hist


# ---------------------------------------------------------------------------
# linear baseline


@dataclass
class LinearModel:
    coef: np.ndarray  # (n_features,)
    intercept: float
    feature_kind: str = "COE"

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        return X @ self.coef + self.intercept


def train_linear_baseline(X, y, feature_kind: str = "COE"):
    """Ordinary least squares with intercept; returns (model, training Metrics)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    if n < m + 1:
        raise ValueError(f"need at least {m + 1} samples for {m} features plus intercept, got {n}")
    A = np.hstack([X, np.ones((n, 1))])
    sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < m + 1:
        raise np.linalg.LinAlgError(f"design matrix is rank deficient (rank {rank} < {m + 1})")
    model = LinearModel(sol[:m], float(sol[m]), feature_kind)
    return model, metrics_from_predictions(y, model.predict(X))


def evaluate_linear(model: LinearModel, X, y) -> Metrics:
    return metrics_from_predictions(y, model.predict(X))


# ---------------------------------------------------------------------------
# persistence


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def save_model(model: MlpModel, path, extra: dict | None = None) -> None:
    """JSON; floats are written with repr precision so weights survive bit for bit."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "feature_kind": model.feature_kind,
        "x_mean": _floats(model.x_mean),
        "x_scale": _floats(model.x_scale),
        "y_offset": float(model.y_offset),
        "y_scale": float(model.y_scale),
        "weights": [_floats(W) for W in model.weights],
        "biases": [_floats(b) for b in model.biases],
    }
    if extra:
        doc["run"] = extra
    Path(path).write_text(json.dumps(doc))


def load_model(path, feature_kind: str | None = None) -> MlpModel:
    """Read a model; ``feature_kind`` (when given) must match the stored tag."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON: {exc}") from exc
    if doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"{path}: model version {doc.get('version')} is not supported "
                               f"(expected {MODEL_VERSION})")
    if feature_kind is not None and doc["feature_kind"] != feature_kind:
        raise ModelFormatError(f"{path}: model expects {doc['feature_kind']} features, "
                               f"caller provides {feature_kind}")
    sizes = [int(s) for s in doc["layer_sizes"]]
    weights = [np.array(w, dtype=float).reshape(a, b) for w, a, b in zip(doc["weights"], sizes[:-1], sizes[1:])]
    biases = [np.array(b, dtype=float) for b in doc["biases"]]
    return MlpModel(sizes, weights, biases, doc["activation"], doc["feature_kind"],
                    np.array(doc["x_mean"]), np.array(doc["x_scale"]),
                    float(doc["y_offset"]), float(doc["y_scale"]))


def run_info(path) -> dict:
    """The provenance block stored alongside a model, if any."""
    return json.loads(Path(path).read_text()).get("run", {})
