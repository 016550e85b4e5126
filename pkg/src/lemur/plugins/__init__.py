"""Trainer plugins speaking the line-delimited JSON stdio protocol.

Each message is one UTF-8 JSON object per line. The host drives the session
with `hello`, `supported_hyperparameters`, and `train` commands; a plugin
answers with `hello_ack`, `hyperparameters`, then per-trial `epoch` events
closed by `done` (or a single `error`). The loop runs until stdin closes.
"""

from __future__ import annotations

import json
import sys
from typing import Callable, Iterable, Iterator

PROTOCOL_VERSION = 1

# train handler: takes the decoded `train` command, yields (epoch, accuracy,
# duration_ns) triples
TrainHandler = Callable[[dict], Iterator[tuple[int, float, int]]]


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def serve_plugin(supported: Iterable[str], run_train: TrainHandler) -> int:
    """Answer host commands until stdin closes; never emits a partial line."""
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            _emit({"event": "error", "message": f"malformed command line: {line[:80]!r}"})
            return 0
        cmd = msg.get("cmd")
        if cmd == "hello":
            if msg.get("version") != PROTOCOL_VERSION:
                _emit(
                    {
                        "event": "error",
                        "message": f"unsupported protocol version {msg.get('version')!r}",
                    }
                )
                return 0
            _emit({"event": "hello_ack", "version": PROTOCOL_VERSION})
        elif cmd == "supported_hyperparameters":
            _emit({"event": "hyperparameters", "names": sorted(supported)})
        elif cmd == "train":
            try:
                for epoch, acc, duration_ns in run_train(msg):
                    _emit(
                        {
                            "event": "epoch",
                            "epoch": epoch,
                            "accuracy": acc,
                            "duration_ns": duration_ns,
                        }
                    )
                _emit({"event": "done"})
            except Exception as exc:  # surfaced to the host as a failed trial
                _emit({"event": "error", "message": str(exc)})
        else:
            _emit({"event": "error", "message": f"unknown command {cmd!r}"})
            return 0
    return 0
