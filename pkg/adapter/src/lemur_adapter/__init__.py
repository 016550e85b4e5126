"""Self-contained stdio trainer plugin around a toy image classifier.

`python -m lemur_adapter` serves the bundled softmax-regression model and
its 8x8 three-class pattern dataset over the line-delimited JSON protocol,
so any host that schedules trainer subprocesses can drive it without
importing this package.
"""

from __future__ import annotations

from .dataset import class_template, make_images
from .net import (
    BadHyperparameter,
    Net,
    supported_hyperparameters,
    train_epochs,
)
from .serve import PROTOCOL_VERSION, serve

__version__ = "0.1.0"

__all__ = [
    "BadHyperparameter",
    "Net",
    "PROTOCOL_VERSION",
    "class_template",
    "make_images",
    "serve",
    "supported_hyperparameters",
    "train_epochs",
]
