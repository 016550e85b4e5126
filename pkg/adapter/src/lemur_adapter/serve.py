"""Stdio server exposing the toy model to a trainer-plugin host.

One UTF-8 JSON object per line in each direction. The host opens with
`hello` (version 1) and may then issue `supported_hyperparameters` and any
number of `train` commands; each train answers with per-epoch `epoch` events
(epoch number from 1, held-out accuracy, measured duration_ns) closed by
`done`. A failing train reports an `error` event and the session keeps
serving; protocol violations (wrong version, unparseable line, unknown
command) report an `error` and end the session cleanly.
"""

from __future__ import annotations

import json
import sys

from .net import supported_hyperparameters, train_epochs

PROTOCOL_VERSION = 1


def _reply(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload) + "\n")
    sys.stdout.flush()


def _handle_train(msg: dict) -> None:
    epochs = train_epochs(
        in_shape=[int(d) for d in msg["in_shape"]],
        out_shape=[int(d) for d in msg["out_shape"]],
        prm=dict(msg["prm"]),
        max_epochs=int(msg["max_epochs"]),
        device=str(msg.get("device", "cpu")),
    )
    for number, (score, duration_ns) in enumerate(epochs, start=1):
        _reply(
            {
                "event": "epoch",
                "epoch": number,
                "accuracy": score,
                "duration_ns": duration_ns,
            }
        )
    _reply({"event": "done"})


def serve() -> int:
    """Answer host commands until stdin closes; never emits a partial line."""
    for raw in sys.stdin:
        raw = raw.strip()
        if not raw:
            continue
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            _reply({"event": "error", "message": f"malformed command line: {raw[:80]!r}"})
            return 0
        cmd = msg.get("cmd")
        if cmd == "hello":
            if msg.get("version") != PROTOCOL_VERSION:
                _reply(
                    {
                        "event": "error",
                        "message": f"unsupported protocol version {msg.get('version')!r}",
                    }
                )
                return 0
            _reply({"event": "hello_ack", "version": PROTOCOL_VERSION})
        elif cmd == "supported_hyperparameters":
            _reply({"event": "hyperparameters", "names": sorted(supported_hyperparameters())})
        elif cmd == "train":
            try:
                _handle_train(msg)
            except Exception as exc:  # reported to the host as a failed trial
                _reply({"event": "error", "message": str(exc)})
        else:
            _reply({"event": "error", "message": f"unknown command {cmd!r}"})
            return 0
    return 0
