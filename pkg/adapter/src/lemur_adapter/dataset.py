"""Bundled toy dataset: 8x8 grayscale images in three pattern classes.

Class 0 is horizontal stripes, class 1 vertical stripes, class 2 a
checkerboard; every image is its class template plus Gaussian pixel noise.
The three templates are mutually orthogonal in pixel space, so a linear
classifier separates the classes comfortably while the noise keeps single
images ambiguous enough that an untrained model scores near chance.
Fixed generation seed: every call returns identical arrays.
"""

from __future__ import annotations

import numpy as np

DATA_SEED = 8125
SIDE = 8
N_CLASSES = 3
N_TRAIN_PER_CLASS = 40
N_TEST_PER_CLASS = 20
NOISE_SCALE = 2.0


def class_template(label: int) -> np.ndarray:
    """The noise-free (SIDE, SIDE) pattern for one class, pixels in {-1, +1}."""
    rows, cols = np.indices((SIDE, SIDE))
    if label == 0:
        parity = rows % 2
    elif label == 1:
        parity = cols % 2
    elif label == 2:
        parity = (rows + cols) % 2
    else:
        raise ValueError(f"label must be 0..{N_CLASSES - 1}, got {label}")
    return np.where(parity == 0, 1.0, -1.0)


def make_images() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(x_train, y_train, x_test, y_test), identical on every call.

    Images are float64 arrays of shape (n, SIDE, SIDE); labels are int
    arrays. Classes are balanced and the train/test points are disjoint.
    """
    rng = np.random.default_rng(DATA_SEED)
    train_x, train_y, test_x, test_y = [], [], [], []
    per_class = N_TRAIN_PER_CLASS + N_TEST_PER_CLASS
    for label in range(N_CLASSES):
        images = class_template(label) + rng.normal(
            loc=0.0, scale=NOISE_SCALE, size=(per_class, SIDE, SIDE)
        )
        train_x.append(images[:N_TRAIN_PER_CLASS])
        test_x.append(images[N_TRAIN_PER_CLASS:])
        train_y.append(np.full(N_TRAIN_PER_CLASS, label))
        test_y.append(np.full(N_TEST_PER_CLASS, label))
    return (
        np.concatenate(train_x),
        np.concatenate(train_y),
        np.concatenate(test_x),
        np.concatenate(test_y),
    )
