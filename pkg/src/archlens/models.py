"""Linear archetype classifiers trained from scratch.

Both model families minimize an L2-regularized, optionally class-weighted
convex objective with full-batch descent and Armijo backtracking, which keeps
the recorded objective trace monotone non-increasing and training fully
deterministic:

    logreg:  (1/W) sum_i w_i * log(1 + exp(-y_i s_i)) + (lambda/2)||w||^2
    svm:     (1/W) sum_i w_i * max(0, 1 - y_i s_i)    + (lambda/2)||w||^2

with s_i = w . x_i + b, y_i in {-1, +1}, W = sum of example weights, and the
bias unregularized. Inverse-frequency weighting uses w_c = n / (2 n_c), so
the weighted optimum coincides with duplicating minority examples at exact
integer ratios.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .data import CorruptionError, FormatError, Label

MODEL_MAGIC = b"CMDL"
MODEL_VERSION = 1

_ARMIJO_C = 1e-4
_MAX_BACKTRACKS = 60


class ModelKind(Enum):
    LOGREG = "logreg"
    LINEAR_SVM = "svm"


class Weighting(Enum):
    NONE = "none"
    INVERSE_FREQUENCY = "inverse_frequency"


@dataclass(frozen=True)
class TrainConfig:
    l2_lambda: float = 1e-2
    max_epochs: int = 500
    tolerance: float = 1e-6
    seed: int = 0
    class_weighting: Weighting = Weighting.INVERSE_FREQUENCY
    # None means "decide from the feature kind": embeddings standardize,
    # bag-of-words does not. Resolved by cross_validate / the CLI.
    standardize: bool | None = None

    def __post_init__(self):
        if self.l2_lambda <= 0:
            raise ValueError("l2_lambda must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    kind: ModelKind
    scaler: Scaler | None = None
    objective_trace: tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


def _fit_scaler(X: np.ndarray) -> Scaler:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)  # zero-variance features pass through
    return Scaler(mean=mean, std=std)


def _example_weights(y: np.ndarray, weighting: Weighting) -> np.ndarray:
    if weighting is Weighting.NONE:
        return np.ones(y.shape[0], dtype=np.float64)
    n = y.shape[0]
    n_pos = int(y.sum())
    n_neg = n - n_pos
    w = np.where(y > 0, n / (2.0 * n_pos), n / (2.0 * n_neg))
    return w.astype(np.float64)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _descend(objective, gradient, dim: int, config: TrainConfig) -> tuple[np.ndarray, float, list[float]]:
    """Full-batch descent with Armijo backtracking on the stacked (w, b) vector.

    Accepts only strictly decreasing steps, so the returned trace is monotone
    by construction; stops on the objective-decrease tolerance, on epoch cap,
    or when no decreasing step exists (subgradient kink).
    """
    theta = np.zeros(dim + 1, dtype=np.float64)
    value = objective(theta)
    trace = [value]
    step = 1.0
    for _ in range(config.max_epochs):
        grad = gradient(theta)
        sq_norm = float(grad @ grad)
        if sq_norm == 0.0:
            break
        step = min(step * 2.0, 1e12)
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            candidate = theta - step * grad
            cand_value = objective(candidate)
            if cand_value <= value - _ARMIJO_C * step * sq_norm:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        decrease = value - cand_value
        theta, value = candidate, cand_value
        trace.append(value)
        if decrease < config.tolerance:
            break
    return theta, value, trace


def train(
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig = TrainConfig(),
    kind: ModelKind = ModelKind.LOGREG,
) -> LinearModel:
    """Fit a linear model on features X (n x d) and binary labels y (0/1)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"feature matrix {X.shape} does not match {y.shape[0]} labels")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature value")
    y01 = y.astype(np.float64)
    if not np.all((y01 == 0) | (y01 == 1)):
        raise ValueError("labels must be binary 0/1")
    if y01.min() == y01.max():
        raise ValueError("training data contains a single class")

    scaler = _fit_scaler(X) if config.standardize else None
    Xs = scaler.apply(X) if scaler is not None else X
    ys = 2.0 * y01 - 1.0
    weights = _example_weights(y01, config.class_weighting)
    total_weight = float(weights.sum())
    lam = config.l2_lambda
    n_features = X.shape[1]

    def scores(theta: np.ndarray) -> np.ndarray:
        return Xs @ theta[:-1] + theta[-1]

    if kind is ModelKind.LOGREG:

        def objective(theta: np.ndarray) -> float:
            margins = ys * scores(theta)
            loss = float(weights @ np.logaddexp(0.0, -margins)) / total_weight
            return loss + 0.5 * lam * float(theta[:-1] @ theta[:-1])

        def gradient(theta: np.ndarray) -> np.ndarray:
            margins = ys * scores(theta)
            coef = weights * (-ys) * _sigmoid(-margins) / total_weight
            grad = np.empty(n_features + 1)
            grad[:-1] = Xs.T @ coef + lam * theta[:-1]
            grad[-1] = coef.sum()
            return grad

    elif kind is ModelKind.LINEAR_SVM:

        def objective(theta: np.ndarray) -> float:
            margins = ys * scores(theta)
            loss = float(weights @ np.maximum(0.0, 1.0 - margins)) / total_weight
            return loss + 0.5 * lam * float(theta[:-1] @ theta[:-1])

        def gradient(theta: np.ndarray) -> np.ndarray:
            margins = ys * scores(theta)
            active = margins < 1.0
            coef = np.where(active, weights * (-ys), 0.0) / total_weight
            grad = np.empty(n_features + 1)
            grad[:-1] = Xs.T @ coef + lam * theta[:-1]
            grad[-1] = coef.sum()
            return grad

    else:
        raise ValueError(f"unknown model kind {kind!r}")

    theta, _, trace = _descend(objective, gradient, n_features, config)
    return LinearModel(
        weights=theta[:-1].copy(),
        bias=float(theta[-1]),
        kind=kind,
        scaler=scaler,
        objective_trace=tuple(trace),
    )


def decision_scores(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.dim:
        raise ValueError(f"feature dimension {X.shape[1]} does not match model dimension {model.dim}")
    Xs = model.scaler.apply(X) if model.scaler is not None else X
    return Xs @ model.weights + model.bias


def decision_score(model: LinearModel, x: np.ndarray) -> float:
    return float(decision_scores(model, np.asarray(x))[0])


def predict(model: LinearModel, x: np.ndarray) -> Label:
    """Detective iff the decision score is strictly positive (ties -> NonDetective)."""
    return Label.DETECTIVE if decision_score(model, x) > 0 else Label.NON_DETECTIVE


def predict_many(model: LinearModel, X: np.ndarray) -> list[Label]:
    return [Label.DETECTIVE if s > 0 else Label.NON_DETECTIVE for s in decision_scores(model, X)]


def save_model(model: LinearModel, path: str | Path) -> None:
    """Versioned little-endian binary: weights and scaler as float64."""
    kind_code = 0 if model.kind is ModelKind.LOGREG else 1
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", MODEL_VERSION))
        fh.write(struct.pack("<B", kind_code))
        fh.write(struct.pack("<I", model.dim))
        fh.write(struct.pack("<d", model.bias))
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
        if model.scaler is None:
            fh.write(struct.pack("<B", 0))
        else:
            fh.write(struct.pack("<B", 1))
            fh.write(np.ascontiguousarray(model.scaler.mean, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(model.scaler.std, dtype="<f8").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    offset = fh.tell()
    data = fh.read(n)
    if len(data) != n:
        raise CorruptionError(f"truncated while reading {what}", offset)
    return data


def load_model(path: str | Path) -> LinearModel:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MODEL_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MODEL_MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != MODEL_VERSION:
            raise FormatError(f"unsupported version {version}")
        (kind_code,) = struct.unpack("<B", _read_exact(fh, 1, "kind"))
        if kind_code not in (0, 1):
            raise FormatError(f"unknown model kind code {kind_code}")
        kind = ModelKind.LOGREG if kind_code == 0 else ModelKind.LINEAR_SVM
        (dim,) = struct.unpack("<I", _read_exact(fh, 4, "dim"))
        (bias,) = struct.unpack("<d", _read_exact(fh, 8, "bias"))
        weights = np.frombuffer(_read_exact(fh, dim * 8, "weights"), dtype="<f8").copy()
        (has_scaler,) = struct.unpack("<B", _read_exact(fh, 1, "scaler flag"))
        scaler = None
        if has_scaler:
            mean = np.frombuffer(_read_exact(fh, dim * 8, "scaler mean"), dtype="<f8").copy()
            std = np.frombuffer(_read_exact(fh, dim * 8, "scaler std"), dtype="<f8").copy()
            scaler = Scaler(mean=mean, std=std)
        offset = fh.tell()
        if fh.read(1):
            raise CorruptionError("trailing bytes after model record", offset)
    return LinearModel(weights=weights, bias=bias, kind=kind, scaler=scaler)
