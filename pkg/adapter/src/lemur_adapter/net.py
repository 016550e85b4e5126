"""Toy image classifier in the standard four-part model template.

`Net` is softmax regression on flattened pixels. Construct it with input
and output shapes plus a `prm` mapping, bind the optimizer settings with
`train_setup(device, prm)`, then feed `learn` one iterable of
(images, one-hot labels) batches per epoch. The module-level
`supported_hyperparameters()` names the prm keys the model honors.

A zero learning rate is legal: the update step vanishes and the parameters
stay at their fixed-seed initialization, so accuracy curves flatline.
"""

from __future__ import annotations

import math
import time
from typing import Iterable, Iterator, Sequence

import numpy as np

from .dataset import N_CLASSES, SIDE, make_images

INIT_SEED = 11
INIT_SCALE = 0.01
SHUFFLE_SEED = 303

SUPPORTED_HYPERPARAMETERS = frozenset({"lr", "momentum", "batch"})


class BadHyperparameter(ValueError):
    """Hyperparameter missing or outside the model's accepted ranges."""


def supported_hyperparameters() -> frozenset[str]:
    return SUPPORTED_HYPERPARAMETERS


def _check_prm(prm: dict) -> tuple[float, float, int]:
    for name in sorted(SUPPORTED_HYPERPARAMETERS):
        if name not in prm:
            raise BadHyperparameter(f"missing hyperparameter {name!r}")
    lr = float(prm["lr"])
    momentum = float(prm["momentum"])
    batch = prm["batch"]
    if not 0.0 <= lr <= 1.0:
        raise BadHyperparameter(f"lr must be in [0, 1], got {lr}")
    if not 0.0 <= momentum < 1.0:
        raise BadHyperparameter(f"momentum must be in [0, 1), got {momentum}")
    if isinstance(batch, bool) or not isinstance(batch, int) or batch < 1:
        raise BadHyperparameter(f"batch must be a positive integer, got {batch!r}")
    return lr, momentum, batch


class Net:
    """Linear softmax classifier over flattened SIDE x SIDE images."""

    def __init__(
        self, in_shape: Sequence[int], out_shape: Sequence[int], prm: dict
    ) -> None:
        if math.prod(in_shape) != SIDE * SIDE:
            raise ValueError(
                f"in_shape must flatten to {SIDE * SIDE} pixels, got {tuple(in_shape)}"
            )
        if math.prod(out_shape) != N_CLASSES:
            raise ValueError(
                f"out_shape must flatten to {N_CLASSES} classes, got {tuple(out_shape)}"
            )
        self.prm = dict(prm)
        rng = np.random.default_rng(INIT_SEED)
        self.weights = INIT_SCALE * rng.standard_normal((SIDE * SIDE, N_CLASSES))
        self.bias = INIT_SCALE * rng.standard_normal(N_CLASSES)

    def train_setup(self, device: str, prm: dict) -> None:
        """Validate prm, select the device, and zero the momentum buffers."""
        self.lr, self.momentum, self.batch = _check_prm(prm)
        self.device = device
        self.vel_w = np.zeros_like(self.weights)
        self.vel_b = np.zeros_like(self.bias)

    def _logits(self, images: np.ndarray) -> np.ndarray:
        flat = np.reshape(images, (len(images), -1))
        return flat @ self.weights + self.bias

    def learn(self, train_data: Iterable[tuple[np.ndarray, np.ndarray]]) -> None:
        """One pass over the given batches: SGD with momentum on cross-entropy."""
        for images, onehot in train_data:
            flat = np.reshape(images, (len(images), -1))
            logits = flat @ self.weights + self.bias
            shifted = logits - logits.max(axis=1, keepdims=True)
            exp = np.exp(shifted)
            delta = exp / exp.sum(axis=1, keepdims=True) - onehot
            grad_w = flat.T @ delta / len(flat)
            grad_b = delta.mean(axis=0)
            self.vel_w = self.momentum * self.vel_w - self.lr * grad_w
            self.vel_b = self.momentum * self.vel_b - self.lr * grad_b
            self.weights += self.vel_w
            self.bias += self.vel_b

    def predict(self, images: np.ndarray) -> np.ndarray:
        return np.argmax(self._logits(images), axis=1)


def train_epochs(
    in_shape: Sequence[int],
    out_shape: Sequence[int],
    prm: dict,
    max_epochs: int,
    device: str = "cpu",
) -> Iterator[tuple[float, int]]:
    """Yield (held-out accuracy, wall-clock duration_ns) once per epoch.

    Builds a fresh model on the bundled dataset, so repeated calls with the
    same prm produce identical accuracy sequences (durations aside).
    """
    if max_epochs < 1:
        raise ValueError("max_epochs must be >= 1")
    net = Net(in_shape, out_shape, prm)
    net.train_setup(device, prm)
    x_train, y_train, x_test, y_test = make_images()
    onehot = np.eye(N_CLASSES)[y_train]
    n = len(x_train)
    shuffle_rng = np.random.default_rng(SHUFFLE_SEED)
    for _ in range(max_epochs):
        started = time.perf_counter_ns()
        order = shuffle_rng.permutation(n)
        net.learn(
            (x_train[order[lo : lo + net.batch]], onehot[order[lo : lo + net.batch]])
            for lo in range(0, n, net.batch)
        )
        score = float(np.mean(net.predict(x_test) == y_test))
        yield score, max(1, time.perf_counter_ns() - started)
