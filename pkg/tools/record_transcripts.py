"""Regenerate the golden protocol transcripts in fixtures/transcripts/.

Runs the bundled reference plugin and records both sides of each session
verbatim. Re-run after any deliberate protocol change, then review the diff.
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "transcripts"

HANDSHAKE_CMDS = [
    {"cmd": "hello", "version": 1},
    {"cmd": "supported_hyperparameters"},
]

TRAIN_CMDS = HANDSHAKE_CMDS + [
    {
        "cmd": "train",
        "config": {
            "task": "img-classification",
            "dataset": "blobs",
            "metric": "acc",
            "nn": "RefLinear",
        },
        "prm": {"lr": 0.1, "momentum": 0.9, "batch": 16},
        "max_epochs": 3,
        "in_shape": [2],
        "out_shape": [3],
        "device": "cpu",
    },
]


def record(commands: list[dict]) -> list[dict]:
    proc = subprocess.Popen(
        [sys.executable, "-m", "lemur.plugins.reference"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
    )
    exchange: list[dict] = []
    assert proc.stdin is not None and proc.stdout is not None
    for cmd in commands:
        proc.stdin.write(json.dumps(cmd) + "\n")
        proc.stdin.flush()
        exchange.append({"from": "host", "line": cmd})
        if cmd["cmd"] == "train":
            while True:
                event = json.loads(proc.stdout.readline())
                exchange.append({"from": "plugin", "line": event})
                if event["event"] in ("done", "error"):
                    break
        else:
            exchange.append({"from": "plugin", "line": json.loads(proc.stdout.readline())})
    proc.stdin.close()
    proc.wait(timeout=10)
    return exchange


def main() -> int:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    sessions = {
        "handshake.json": {
            "description": "hello/ack and hyperparameter discovery",
            "exchange": record(HANDSHAKE_CMDS),
        },
        "train_three_epochs.json": {
            "description": "full session: handshake then one 3-epoch trial",
            "exchange": record(TRAIN_CMDS),
        },
    }
    for name, payload in sessions.items():
        path = OUT_DIR / name
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
