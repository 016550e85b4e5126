"""Plugin wrapper around the built-in softmax-regression trainer."""

from __future__ import annotations

import sys
from typing import Iterator

from ..trainer import SUPPORTED_HYPERPARAMETERS, reference_trainer
from . import serve_plugin


def _train(msg: dict) -> Iterator[tuple[int, float, int]]:
    stream = reference_trainer(
        in_shape=list(msg["in_shape"]),
        out_shape=list(msg["out_shape"]),
        prm=dict(msg["prm"]),
        max_epochs=int(msg["max_epochs"]),
    )
    for epoch, (acc, duration_ns) in enumerate(stream, start=1):
        yield epoch, acc, duration_ns


def main() -> int:
    return serve_plugin(SUPPORTED_HYPERPARAMETERS, _train)


if __name__ == "__main__":
    sys.exit(main())
