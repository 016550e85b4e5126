"""Scriptable echo plugin for harness and CLI tests.

Emits a fixed (optionally ramping) accuracy per epoch without training
anything. Failure modes are switchable from the command line so tests can
exercise the host's error paths:

* --fail-after-epoch N: raise after emitting N epoch events.
* --emit-garbage: print a non-JSON line instead of the hello ack.
* --require NAME: advertise an extra supported hyperparameter (repeatable).
* --hang: sleep instead of answering `train` (for deadline tests).
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Iterator

from . import serve_plugin

DEFAULT_SUPPORTED = ("lr", "momentum", "batch", "transform")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="stub-plugin")
    parser.add_argument("--accuracy", type=float, default=0.5)
    parser.add_argument("--ramp", type=float, default=0.0,
                        help="per-epoch accuracy increment")
    parser.add_argument("--fail-after-epoch", type=int, default=0)
    parser.add_argument("--emit-garbage", action="store_true")
    parser.add_argument("--hang", action="store_true")
    parser.add_argument("--require", action="append", default=[])
    args = parser.parse_args(argv)

    if args.emit_garbage:
        # violate the one-JSON-object-per-line contract on purpose
        next(sys.stdin, None)
        sys.stdout.write("this is not json\n")
        sys.stdout.flush()
        return 0

    def train(msg: dict) -> Iterator[tuple[int, float, int]]:
        if args.hang:
            time.sleep(3600)
        for epoch in range(1, int(msg["max_epochs"]) + 1):
            if args.fail_after_epoch and epoch > args.fail_after_epoch:
                raise RuntimeError(f"scripted failure after epoch {args.fail_after_epoch}")
            acc = min(1.0, max(0.0, args.accuracy + args.ramp * (epoch - 1)))
            yield epoch, acc, 1000

    return serve_plugin(tuple(DEFAULT_SUPPORTED) + tuple(args.require), train)


if __name__ == "__main__":
    sys.exit(main())
