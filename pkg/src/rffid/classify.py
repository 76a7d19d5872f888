"""Deterministic multi-class max-margin linear classifier.

One-vs-rest regularized hinge loss minimized by full-batch subgradient
descent with a fixed decaying schedule.  No sampling anywhere, so identical
datasets always produce identical models, which the trial-averaged
experiment protocol relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_LAMBDA = 1e-3
DEFAULT_EPOCHS = 200
DEFAULT_LR = 0.1
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with integer emitter labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=float))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=int))
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix (samples x dims)")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("feature and label counts differ")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class TrainedModel:
    """Per-class hyperplanes plus the training standardization."""

    classes: np.ndarray
    weights: np.ndarray      # (n_classes, n_kept_dims)
    biases: np.ndarray       # (n_classes,)
    mean: np.ndarray         # (n_dims,) training feature means
    std: np.ndarray          # (n_dims,) training feature stds (kept dims)
    kept: np.ndarray         # (n_dims,) bool mask of non-degenerate dims
    lam: float
    epochs: int

    @property
    def n_dims(self) -> int:
        return self.mean.size


def _standardize(model_mean, model_std, kept, features):
    z = (features[:, kept] - model_mean[kept]) / model_std[kept]
    return z


def train(
    data: LabeledDataset,
    lam: float = DEFAULT_LAMBDA,
    epochs: int = DEFAULT_EPOCHS,
    lr: float = DEFAULT_LR,
) -> TrainedModel:
    """Fit one-vs-rest hinge hyperplanes on z-scored features.

    Dimensions whose training standard deviation is zero are dropped.  The
    schedule is lr / (1 + t) over full-batch subgradient steps.
    """
    classes = np.unique(data.labels)
    if classes.size < 2:
        raise ValueError("training requires at least two classes")
    counts = [np.sum(data.labels == c) for c in classes]
    if min(counts) < 2:
        raise ValueError("every class needs at least two training samples")

    mean = data.features.mean(axis=0)
    std = data.features.std(axis=0)
    kept = std > STD_FLOOR
    if not np.any(kept):
        raise ValueError("every feature dimension is constant")
    x = (data.features[:, kept] - mean[kept]) / std[kept]
    n, d = x.shape
    m = classes.size

    targets = np.where(data.labels[:, None] == classes[None, :], 1.0, -1.0)  # (n, m)
    w = np.zeros((m, d))
    b = np.zeros(m)
    for t in range(epochs):
        scores = x @ w.T + b  # (n, m)
        violating = (targets * scores) < 1.0
        coeff = targets * violating  # (n, m)
        grad_w = lam * w - (x.T @ coeff).T / n
        grad_b = -coeff.sum(axis=0) / n
        step = lr / (1.0 + t)
        w -= step * grad_w
        b -= step * grad_b

    return TrainedModel(
        classes=classes, weights=w, biases=b,
        mean=mean, std=std, kept=kept, lam=lam, epochs=epochs,
    )


def scores(model: TrainedModel, features) -> np.ndarray:
    """Per-class linear scores for one or many feature vectors."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[1] != model.n_dims:
        raise ValueError(
            f"feature dimension {features.shape[1]} does not match model {model.n_dims}"
        )
    z = _standardize(model.mean, model.std, model.kept, features)
    return z @ model.weights.T + model.biases


def predict(model: TrainedModel, feature):
    """(label, per-class scores) for one feature vector; ties pick the lowest class."""
    s = scores(model, feature)[0]
    return int(model.classes[int(np.argmax(s))]), s


def predict_batch(model: TrainedModel, features) -> np.ndarray:
    """Labels for a feature matrix."""
    s = scores(model, features)
    return model.classes[np.argmax(s, axis=1)]


def evaluate(model: TrainedModel, data: LabeledDataset) -> float:
    """Fraction of correct predictions on a labeled dataset."""
    if data.n_samples == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    return float(np.mean(predict_batch(model, data.features) == data.labels))


def save_model(model: TrainedModel, path) -> None:
    """Write the model as a flat text dump with a self-describing header."""
    lines = [
        "rffid-linear-model v1",
        f"classes {model.classes.size} dims {model.n_dims} lambda {model.lam:.17g} epochs {model.epochs}",
        "labels " + " ".join(str(int(c)) for c in model.classes),
        "kept " + " ".join("1" if k else "0" for k in model.kept),
        "mean " + " ".join(f"{v:.17g}" for v in model.mean),
        "std " + " ".join(f"{v:.17g}" for v in model.std),
        "biases " + " ".join(f"{v:.17g}" for v in model.biases),
    ]
    for row in model.weights:
        lines.append("w " + " ".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> TrainedModel:
    """Read a model written by save_model."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != "rffid-linear-model v1":
        raise ValueError("not a recognized model file")
    header = lines[1].split()
    n_classes, n_dims = int(header[1]), int(header[3])
    lam, epochs = float(header[5]), int(header[7])

    def field(idx, name):
        parts = lines[idx].split()
        if parts[0] != name:
            raise ValueError(f"model file corrupt: expected {name}, got {parts[0]}")
        return parts[1:]

    classes = np.array([int(v) for v in field(2, "labels")])
    kept = np.array([v == "1" for v in field(3, "kept")])
    mean = np.array([float(v) for v in field(4, "mean")])
    std = np.array([float(v) for v in field(5, "std")])
    biases = np.array([float(v) for v in field(6, "biases")])
    weights = np.array([[float(v) for v in field(7 + i, "w")] for i in range(n_classes)])
    if classes.size != n_classes or mean.size != n_dims:
        raise ValueError("model file corrupt: header counts do not match payload")
    return TrainedModel(
        classes=classes, weights=weights, biases=biases,
        mean=mean, std=std, kept=kept, lam=lam, epochs=epochs,
    )
