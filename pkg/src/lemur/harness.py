"""Study orchestration: hosts a trainer plugin over stdio, drives the TPE
loop, and persists every trial into the registry.

The plugin is one subprocess per study, re-spawned if it dies. Trials run
sequentially; after each one a checkpoint (sampler history plus progress
counters) is written atomically, so a killed study resumes from its last
completed trial and, because suggestions and the built-in trainers are
deterministic, re-ingestion of the interrupted trial is conflict-free.
"""

from __future__ import annotations

import json
import os
import queue
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path

from .config import DEFAULT_TRANSFORMS, ConfigId
from .plugins import PROTOCOL_VERSION
from .registry import EpochResult, Registry, TrialDocument, placeholder_code, prm_hash
from .space import SearchSpace
from .tpe import Study

DEFAULT_EPOCH_TIMEOUT_S = 300.0


class HarnessError(RuntimeError):
    pass


class SpawnError(HarnessError):
    """Plugin process could not be started."""


class ProtocolError(HarnessError):
    """Plugin broke the line-delimited JSON contract."""


class UnsupportedSpace(HarnessError):
    """Plugin requires a hyperparameter the search space lacks."""


class HandshakeFailed(HarnessError):
    """Any failure while bringing a plugin up."""


class TrialFailed(HarnessError):
    """Trial aborted by plugin error or crash; completed epochs persist."""

    def __init__(self, message: str, document: TrialDocument | None = None):
        super().__init__(message)
        self.document = document


class Timeout(TrialFailed):
    """No plugin event within the per-epoch deadline."""


@dataclass(frozen=True)
class PluginDescriptor:
    command: tuple[str, ...]
    nn_name: str
    in_shape: tuple[int, ...] = (2,)
    out_shape: tuple[int, ...] = (3,)

    def __post_init__(self) -> None:
        if not self.command:
            raise ValueError("launch command is empty")
        for shape in (self.in_shape, self.out_shape):
            if not shape or any(d < 1 for d in shape):
                raise ValueError(f"bad shape {shape}")


@dataclass
class StudyRun:
    config: ConfigId
    space: SearchSpace
    trials: int
    max_epochs: int
    seed: int
    registry: Registry
    plugin: PluginDescriptor
    device: str = "cpu"
    timeout_s: float = DEFAULT_EPOCH_TIMEOUT_S
    checkpoint_path: Path | None = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 1 <= self.max_epochs <= 50:
            raise ValueError("max_epochs must be in [1, 50]")


@dataclass
class StudySummary:
    completed: int
    failed: int
    best_prm: dict | None
    best_accuracy: float | None

    def to_dict(self) -> dict:
        return {
            "completed": self.completed,
            "failed": self.failed,
            "best_prm": self.best_prm,
            "best_accuracy": self.best_accuracy,
        }


_EOF = object()


class PluginClient:
    """One plugin subprocess plus a reader thread enforcing recv deadlines."""

    def __init__(self, descriptor: PluginDescriptor, timeout_s: float = DEFAULT_EPOCH_TIMEOUT_S):
        self.descriptor = descriptor
        self.timeout_s = timeout_s
        try:
            self._proc = subprocess.Popen(
                list(descriptor.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise SpawnError(f"cannot launch {descriptor.command}: {exc}") from exc
        self._queue: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._queue.put(line)
        self._queue.put(_EOF)

    def alive(self) -> bool:
        return self._proc.poll() is None

    def send(self, obj: dict) -> bool:
        """False when the plugin end of the pipe is gone."""
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
            return True
        except (OSError, ValueError):
            return False

    def recv(self) -> dict | None:
        """Next event, None at stream end; raises Timeout / ProtocolError."""
        try:
            item = self._queue.get(timeout=self.timeout_s)
        except queue.Empty:
            raise Timeout(f"no plugin event within {self.timeout_s}s") from None
        if item is _EOF:
            return None
        try:
            msg = json.loads(item)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"plugin sent a non-JSON line: {item[:80]!r}") from exc
        if not isinstance(msg, dict):
            raise ProtocolError(f"plugin sent a non-object line: {item[:80]!r}")
        return msg

    def handshake(self) -> set[str]:
        """hello/hello_ack exchange, then the supported hyperparameter set."""
        if not self.send({"cmd": "hello", "version": PROTOCOL_VERSION}):
            raise ProtocolError("plugin closed stdin pipe before hello")
        ack = self.recv()
        if ack is None:
            raise ProtocolError("plugin exited before hello_ack")
        if ack.get("event") != "hello_ack" or ack.get("version") != PROTOCOL_VERSION:
            raise ProtocolError(f"bad hello_ack: {ack!r}")
        if not self.send({"cmd": "supported_hyperparameters"}):
            raise ProtocolError("plugin closed pipe after hello")
        answer = self.recv()
        if answer is None or answer.get("event") != "hyperparameters":
            raise ProtocolError(f"bad hyperparameters answer: {answer!r}")
        names = answer.get("names")
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ProtocolError(f"bad hyperparameter names: {names!r}")
        return set(names)

    def close(self) -> None:
        if self._proc.stdin is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "PluginClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def restrict_space(space: SearchSpace, supported: set[str]) -> SearchSpace:
    """Intersect the space with the plugin's supported names; a supported
    name missing from the space is an error."""
    missing = supported - set(space)
    if missing:
        raise UnsupportedSpace(f"plugin requires {sorted(missing)} not in the space")
    return {name: spec for name, spec in space.items() if name in supported}


def handshake(
    descriptor: PluginDescriptor, timeout_s: float = DEFAULT_EPOCH_TIMEOUT_S
) -> set[str]:
    with PluginClient(descriptor, timeout_s) as client:
        return client.handshake()


def _codes_for(run: StudyRun, transform: str) -> dict[str, str]:
    """Placeholder code texts keyed purely by name, so studies and fixture
    loads that touch the same entity agree on its content hash."""
    return {
        "nn": placeholder_code("nn", run.config.nn),
        "metric": placeholder_code("metric", run.config.metric),
        "transform": placeholder_code("transform", transform),
    }


def _run_trial(run: StudyRun, prm: dict, client: PluginClient) -> TrialDocument:
    """Send one train command, collect epochs, ingest whatever completed."""
    transform = str(prm.get("transform", DEFAULT_TRANSFORMS[0]))
    sent = client.send(
        {
            "cmd": "train",
            "config": {
                "task": run.config.task,
                "dataset": run.config.dataset,
                "metric": run.config.metric,
                "nn": run.config.nn,
            },
            "prm": prm,
            "max_epochs": run.max_epochs,
            "in_shape": list(run.plugin.in_shape),
            "out_shape": list(run.plugin.out_shape),
            "device": run.device,
        }
    )
    if not sent:
        raise TrialFailed("plugin pipe closed before train command")

    epochs: list[EpochResult] = []

    def ingest_partial() -> TrialDocument | None:
        if not epochs:
            return None
        doc = TrialDocument(
            config=run.config,
            transform=transform,
            prm=dict(prm),
            epochs=tuple(epochs),
            codes=_codes_for(run, transform),
        )
        run.registry.ingest_trial(doc, on_conflict="overwrite")
        return doc

    while True:
        try:
            msg = client.recv()
        except Timeout:
            doc = ingest_partial()
            raise Timeout(f"no event within {run.timeout_s}s", doc) from None
        if msg is None:
            doc = ingest_partial()
            raise TrialFailed("plugin process ended mid-trial", doc)
        event = msg.get("event")
        if event == "epoch":
            epoch = msg.get("epoch")
            acc = msg.get("accuracy")
            duration = msg.get("duration_ns")
            expected = len(epochs) + 1
            if epoch != expected:
                raise ProtocolError(f"epoch {epoch!r} arrived, expected {expected}")
            if not isinstance(acc, (int, float)) or not 0.0 <= acc <= 1.0:
                raise ProtocolError(f"epoch {epoch}: accuracy {acc!r} outside [0, 1]")
            if not isinstance(duration, int) or duration < 0:
                raise ProtocolError(f"epoch {epoch}: bad duration_ns {duration!r}")
            if len(epochs) >= run.max_epochs:
                raise ProtocolError(f"plugin exceeded max_epochs={run.max_epochs}")
            epochs.append(EpochResult(epoch, float(acc), duration))
        elif event == "done":
            doc = ingest_partial()
            if doc is None:
                raise TrialFailed("plugin sent done without any epoch")
            return doc
        elif event == "error":
            doc = ingest_partial()
            raise TrialFailed(f"plugin error: {msg.get('message')!r}", doc)
        else:
            raise ProtocolError(f"unexpected plugin event {msg!r}")


def run_trial(run: StudyRun, prm: dict) -> TrialDocument:
    """Standalone single trial against a freshly spawned plugin."""
    with PluginClient(run.plugin, run.timeout_s) as client:
        client.handshake()
        return _run_trial(run, prm, client)


@dataclass
class _Best:
    """only_best comparator state over every row this study ingested."""

    accuracy: float | None = None
    epoch: int = 0
    prm_hash: str = ""
    prm: dict | None = None

    def offer(self, doc: TrialDocument) -> None:
        phash = prm_hash(doc.prm)
        for entry in doc.epochs:
            if self.accuracy is None or (-entry.accuracy, entry.epoch, phash) < (
                -self.accuracy,
                self.epoch,
                self.prm_hash,
            ):
                self.accuracy = entry.accuracy
                self.epoch = entry.epoch
                self.prm_hash = phash
                self.prm = dict(doc.prm)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "epoch": self.epoch,
            "prm_hash": self.prm_hash,
            "prm": self.prm,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "_Best":
        return cls(raw["accuracy"], raw["epoch"], raw["prm_hash"], raw["prm"])


def default_checkpoint_path(db_path: str | Path, config: ConfigId, seed: int) -> Path:
    return Path(f"{db_path}.study-{config}-s{seed}.json")


def _write_checkpoint(path: Path, study: Study, completed: int, failed: int, best: _Best) -> None:
    payload = json.dumps(
        {"completed": completed, "failed": failed, "best": best.to_dict(),
         "study": study.to_dict()},
        indent=2,
    )
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(payload, encoding="utf-8")
    os.replace(tmp, path)


def run_study(run: StudyRun) -> StudySummary:
    """Execute (or resume) the full suggest -> train -> observe loop."""
    checkpoint = run.checkpoint_path
    completed = failed = 0
    best = _Best()
    study: Study | None = None

    if checkpoint is not None and checkpoint.exists():
        raw = json.loads(checkpoint.read_text(encoding="utf-8"))
        study = Study.from_dict(raw["study"])
        if study.seed != run.seed:
            raise ValueError(
                f"checkpoint {checkpoint} was written with seed {study.seed}, "
                f"this run uses {run.seed}"
            )
        completed = raw["completed"]
        failed = raw["failed"]
        best = _Best.from_dict(raw["best"])

    client: PluginClient | None = None
    try:
        while completed + failed < run.trials:
            if client is None or not client.alive():
                if client is not None:
                    client.close()
                try:
                    client = PluginClient(run.plugin, run.timeout_s)
                    supported = client.handshake()
                except HarnessError as exc:
                    raise HandshakeFailed(str(exc)) from exc
                space = restrict_space(run.space, supported)
                if study is None:
                    study = Study(space=space, seed=run.seed)
                elif study.space != space:
                    raise ValueError(
                        "checkpoint space does not match the plugin-restricted space"
                    )
            prm = study.suggest()
            try:
                doc = _run_trial(run, prm, client)
            except TrialFailed as exc:
                failed += 1
                if exc.document is not None:
                    best.offer(exc.document)
            else:
                completed += 1
                best.offer(doc)
                study.observe(prm, doc.epochs[-1].accuracy)
            if checkpoint is not None:
                _write_checkpoint(checkpoint, study, completed, failed, best)
    finally:
        if client is not None:
            client.close()
    return StudySummary(
        completed=completed,
        failed=failed,
        best_prm=best.prm,
        best_accuracy=best.accuracy,
    )
