"""Built-in dependency-free trainer: softmax regression on a deterministic
synthetic dataset, used as the reference plugin and in end-to-end tests.

The dataset is three unit-variance Gaussian blobs in 2-D whose means sit on
an equilateral triangle with side 6 (six sigma between class means), so a
linear model separates them almost perfectly. 300 train / 150 test points,
balanced classes, fixed generation seed.
"""

from __future__ import annotations

import math
import time
from typing import Iterator

import numpy as np

from .metrics import accuracy

DATA_SEED = 20240214
SHUFFLE_SEED = 77
# Init seed chosen so the untrained model scores near chance on the test
# split; a vanishing learning rate then keeps accuracy at chance as expected.
INIT_SEED = 7
INIT_SCALE = 0.01

N_TRAIN_PER_CLASS = 100
N_TEST_PER_CLASS = 50

BLOB_MEANS = ((0.0, 0.0), (6.0, 0.0), (3.0, 3.0 * math.sqrt(3.0)))

SUPPORTED_HYPERPARAMETERS = frozenset({"lr", "momentum", "batch"})


class BadHyperparameter(ValueError):
    """Hyperparameter outside the trainer's accepted ranges."""


def make_blobs() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(x_train, y_train, x_test, y_test), identical on every call."""
    rng = np.random.default_rng(DATA_SEED)
    train_x, train_y, test_x, test_y = [], [], [], []
    per_class = N_TRAIN_PER_CLASS + N_TEST_PER_CLASS
    for label, mean in enumerate(BLOB_MEANS):
        points = rng.normal(loc=mean, scale=1.0, size=(per_class, 2))
        train_x.append(points[:N_TRAIN_PER_CLASS])
        test_x.append(points[N_TRAIN_PER_CLASS:])
        train_y.append(np.full(N_TRAIN_PER_CLASS, label))
        test_y.append(np.full(N_TEST_PER_CLASS, label))
    return (
        np.concatenate(train_x),
        np.concatenate(train_y),
        np.concatenate(test_x),
        np.concatenate(test_y),
    )


def _check_prm(prm: dict) -> tuple[float, float, int]:
    for name in ("lr", "momentum", "batch"):
        if name not in prm:
            raise BadHyperparameter(f"missing hyperparameter {name!r}")
    lr = float(prm["lr"])
    momentum = float(prm["momentum"])
    batch = prm["batch"]
    if not 0.0 < lr <= 1.0:
        raise BadHyperparameter(f"lr must be in (0, 1], got {lr}")
    if not 0.0 <= momentum < 1.0:
        raise BadHyperparameter(f"momentum must be in [0, 1), got {momentum}")
    if isinstance(batch, bool) or not isinstance(batch, int) or batch < 1 or batch & (batch - 1):
        raise BadHyperparameter(f"batch must be a positive power of two, got {batch!r}")
    return lr, momentum, batch


def reference_trainer(
    in_shape: list[int],
    out_shape: list[int],
    prm: dict,
    max_epochs: int,
) -> Iterator[tuple[float, int]]:
    """Yield (held-out accuracy, wall-clock duration_ns) once per epoch.

    Mini-batch SGD with momentum on a single linear map plus bias; fully
    deterministic given prm (durations aside).
    """
    lr, momentum, batch = _check_prm(prm)
    if math.prod(in_shape) != 2:
        raise ValueError(f"in_shape must flatten to 2 features, got {in_shape}")
    if math.prod(out_shape) != 3:
        raise ValueError(f"out_shape must flatten to 3 classes, got {out_shape}")
    if max_epochs < 1:
        raise ValueError("max_epochs must be >= 1")

    x_train, y_train, x_test, y_test = make_blobs()
    n = len(x_train)
    onehot = np.eye(3)[y_train]
    init_rng = np.random.default_rng(INIT_SEED)
    weights = INIT_SCALE * init_rng.standard_normal((2, 3))
    bias = INIT_SCALE * init_rng.standard_normal(3)
    vel_w = np.zeros_like(weights)
    vel_b = np.zeros_like(bias)
    shuffle_rng = np.random.default_rng(SHUFFLE_SEED)

    def softmax(logits: np.ndarray) -> np.ndarray:
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        return exp / exp.sum(axis=1, keepdims=True)

    for _ in range(max_epochs):
        started = time.perf_counter_ns()
        order = shuffle_rng.permutation(n)
        for lo in range(0, n, batch):
            idx = order[lo : lo + batch]
            xb, yb = x_train[idx], onehot[idx]
            delta = softmax(xb @ weights + bias) - yb
            grad_w = xb.T @ delta / len(idx)
            grad_b = delta.mean(axis=0)
            vel_w = momentum * vel_w - lr * grad_w
            vel_b = momentum * vel_b - lr * grad_b
            weights += vel_w
            bias += vel_b
        predicted = np.argmax(x_test @ weights + bias, axis=1)
        score = accuracy([int(p) for p in predicted], [int(t) for t in y_test])
        yield score, max(1, time.perf_counter_ns() - started)
