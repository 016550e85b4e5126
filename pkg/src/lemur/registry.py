"""SQLite-backed store for trial results, code artifacts, and hyperparameter
sets.

Layout follows the five-table shape the rest of the pipeline expects:

* ``nn`` / ``metric`` / ``transform``: content-addressed code entities, one
  row per distinct code text, id = SHA-256 of the normalized text.
* ``prm``: hyperparameter sets keyed by the hash of their canonical JSON.
* ``stat``: one row per (config, prm, epoch) measurement; the composite
  primary key is what makes re-ingestion idempotent.

The ``prm`` column on ``stat`` carries the entries of that row's parameter
set as canonical JSON. This is denormalized on purpose: reference-table rows
all share the sentinel hash ``reference-fixture`` while carrying different
entries, so the hash alone cannot recover them.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .config import NAME_TOKEN, ConfigId

CODE_KINDS = ("nn", "metric", "transform")

FIXTURE_PRM_HASH = "reference-fixture"
FIXTURE_TRANSFORM = "published"
FIXTURE_KEYS = frozenset(
    {"task", "dataset", "metric", "nn", "value", "params_millions", "resolution"}
)

# Keys and string values of prm entries; keeps every entry safe to embed in
# key=value;... encodings (no '=', ';', ',' or whitespace).
PRM_TOKEN = re.compile(r"[A-Za-z0-9_]+(-[A-Za-z0-9_]+)*\Z")

Scalar = float | int | str


class CorruptStore(RuntimeError):
    """Existing file is not a store produced by this module."""


class IoError(OSError):
    """Store file could not be opened or created."""


class NameCollision(ValueError):
    """Same (kind, name) already registered with different code."""


class UnknownCode(LookupError):
    """Referenced code entity is neither registered nor provided."""


class ConflictError(RuntimeError):
    """Same stat key already stored with different values."""


class MalformedFixture(ValueError):
    """Reference-table file does not match the documented format."""


def normalize_code(text: str) -> str:
    """Strip trailing whitespace per line and enforce a final newline."""
    normalized = "\n".join(line.rstrip() for line in text.split("\n"))
    if not normalized.endswith("\n"):
        normalized += "\n"
    return normalized


def code_id(text: str) -> str:
    return hashlib.sha256(normalize_code(text).encode("utf-8")).hexdigest()


def placeholder_code(kind: str, name: str) -> str:
    """Stand-in code text for entities the pipeline registers by name only.

    The text depends on nothing but (kind, name), so every internal writer
    produces the same hash for the same name and upserts stay collision-free.
    """
    if kind not in CODE_KINDS:
        raise ValueError(f"unknown code kind {kind!r}")
    return f"# {kind} {name}\n"


def validate_prm_entries(entries: Mapping[str, Scalar]) -> dict[str, Scalar]:
    out: dict[str, Scalar] = {}
    for key, value in entries.items():
        if not isinstance(key, str) or not PRM_TOKEN.match(key):
            raise ValueError(f"bad prm key {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ValueError(f"prm {key}: unsupported value {value!r}")
        if isinstance(value, float) and not math.isfinite(value):
            raise ValueError(f"prm {key}: non-finite value {value!r}")
        if isinstance(value, str) and not PRM_TOKEN.match(value):
            raise ValueError(f"prm {key}: bad token value {value!r}")
        out[key] = value
    return out


def canonical_prm(entries: Mapping[str, Scalar]) -> str:
    """Canonical JSON form: sorted keys, shortest round-trip float rendering."""
    return json.dumps(
        validate_prm_entries(entries), sort_keys=True, separators=(",", ":")
    )


def prm_hash(entries: Mapping[str, Scalar]) -> str:
    return hashlib.sha256(canonical_prm(entries).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CodeEntity:
    kind: str
    name: str
    code_text: str
    id: str


@dataclass(frozen=True)
class EpochResult:
    epoch: int
    accuracy: float
    duration_ns: int


@dataclass(frozen=True)
class TrialDocument:
    """One trial's results in the JSON interchange shape."""

    config: ConfigId
    transform: str
    prm: dict[str, Scalar]
    epochs: tuple[EpochResult, ...]
    codes: dict[str, str] | None = None

    def __post_init__(self) -> None:
        if not NAME_TOKEN.match(self.transform):
            raise ValueError(f"bad transform name {self.transform!r}")
        validate_prm_entries(self.prm)
        if not self.epochs:
            raise ValueError("trial document needs at least one epoch")
        if self.epochs[0].epoch != 1:
            raise ValueError("epoch numbering must start at 1")
        for prev, cur in zip(self.epochs, self.epochs[1:]):
            if cur.epoch <= prev.epoch:
                raise ValueError("epoch numbers must be strictly increasing")
        for entry in self.epochs:
            if not (0.0 <= entry.accuracy <= 1.0) or not math.isfinite(entry.accuracy):
                raise ValueError(f"epoch {entry.epoch}: accuracy {entry.accuracy!r}")
            if entry.duration_ns < 0:
                raise ValueError(f"epoch {entry.epoch}: negative duration")
        if self.codes is not None:
            for kind in self.codes:
                if kind not in CODE_KINDS:
                    raise ValueError(f"unknown code kind {kind!r}")

    def to_json(self) -> str:
        doc: dict = {
            "config": {
                "task": self.config.task,
                "dataset": self.config.dataset,
                "metric": self.config.metric,
                "nn": self.config.nn,
            },
            "transform": self.transform,
            "prm": dict(sorted(self.prm.items())),
            "epochs": [
                {"epoch": e.epoch, "accuracy": e.accuracy, "duration_ns": e.duration_ns}
                for e in self.epochs
            ],
        }
        if self.codes is not None:
            doc["codes"] = dict(sorted(self.codes.items()))
        return json.dumps(doc, indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "TrialDocument":
        raw = json.loads(text)
        cfg = raw["config"]
        return cls(
            config=ConfigId(cfg["task"], cfg["dataset"], cfg["metric"], cfg["nn"]),
            transform=raw["transform"],
            prm=dict(raw["prm"]),
            epochs=tuple(
                EpochResult(e["epoch"], e["accuracy"], e["duration_ns"])
                for e in raw["epochs"]
            ),
            codes=dict(raw["codes"]) if "codes" in raw else None,
        )


@dataclass(frozen=True)
class ResultRow:
    """One row of the query surface; column set and order are part of the
    interchange contract and must not change."""

    task: str
    dataset: str
    metric: str
    metric_code: str
    nn: str
    nn_code: str
    epoch: int
    accuracy: float
    duration: int
    prm: dict[str, Scalar]
    transform_code: str

    COLUMNS = (
        "task",
        "dataset",
        "metric",
        "metric_code",
        "nn",
        "nn_code",
        "epoch",
        "accuracy",
        "duration",
        "prm",
        "transform_code",
    )


@dataclass
class IngestReport:
    inserted: int = 0
    duplicates: int = 0
    conflicts: int = 0

    def merge(self, other: "IngestReport") -> None:
        self.inserted += other.inserted
        self.duplicates += other.duplicates
        self.conflicts += other.conflicts


_SCHEMA = {
    "nn": ("id", "name", "code"),
    "metric": ("id", "name", "code"),
    "transform": ("id", "name", "code"),
    "prm": ("hash", "entries"),
    "stat": (
        "task",
        "dataset",
        "metric_id",
        "nn_id",
        "transform_id",
        "prm_hash",
        "epoch",
        "accuracy",
        "duration_ns",
        "prm",
    ),
}

_CODE_TABLE_DDL = """\
CREATE TABLE IF NOT EXISTS {kind} (
    id   TEXT PRIMARY KEY,
    name TEXT NOT NULL UNIQUE,
    code TEXT NOT NULL
)"""

_STAT_DDL = """\
CREATE TABLE IF NOT EXISTS stat (
    task         TEXT    NOT NULL,
    dataset      TEXT    NOT NULL,
    metric_id    TEXT    NOT NULL REFERENCES metric(id),
    nn_id        TEXT    NOT NULL REFERENCES nn(id),
    transform_id TEXT    NOT NULL REFERENCES transform(id),
    prm_hash     TEXT    NOT NULL,
    epoch        INTEGER NOT NULL CHECK (epoch >= 1),
    accuracy     REAL    NOT NULL CHECK (accuracy >= 0.0 AND accuracy <= 1.0),
    duration_ns  INTEGER NOT NULL CHECK (duration_ns >= 0),
    prm          TEXT    NOT NULL,
    PRIMARY KEY (task, dataset, metric_id, nn_id, transform_id, prm_hash, epoch)
)"""


class Registry:
    """Handle to one store file. Single writer, any number of readers."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        try:
            self._conn = sqlite3.connect(self.path, check_same_thread=False)
        except sqlite3.Error as exc:
            raise IoError(f"cannot open store at {self.path}: {exc}") from exc
        self._conn.execute("PRAGMA foreign_keys = ON")
        try:
            self._init_schema()
        except sqlite3.DatabaseError as exc:
            self._conn.close()
            raise CorruptStore(f"{self.path} is not a usable store: {exc}") from exc

    def _init_schema(self) -> None:
        with self._conn:
            for kind in CODE_KINDS:
                self._conn.execute(_CODE_TABLE_DDL.format(kind=kind))
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS prm ("
                " hash TEXT PRIMARY KEY, entries TEXT NOT NULL)"
            )
            self._conn.execute(_STAT_DDL)
        for table, expected in _SCHEMA.items():
            rows = self._conn.execute(f"PRAGMA table_info({table})").fetchall()
            names = tuple(r[1] for r in rows)
            if set(names) != set(expected):
                raise CorruptStore(
                    f"table {table} has columns {names}, expected {expected}"
                )

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "Registry":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- code entities -----------------------------------------------------

    def upsert_code(self, kind: str, name: str, code_text: str) -> CodeEntity:
        """Register code under a content hash; duplicate text is a no-op.

        An empty name auto-generates `<kind>-<first 8 hash hex>`. Registering
        a known name with different code raises NameCollision.
        """
        if kind not in CODE_KINDS:
            raise ValueError(f"unknown code kind {kind!r}")
        normalized = normalize_code(code_text)
        cid = hashlib.sha256(normalized.encode("utf-8")).hexdigest()
        row = self._conn.execute(
            f"SELECT name, code FROM {kind} WHERE id = ?", (cid,)
        ).fetchone()
        if row is not None:
            return CodeEntity(kind, row[0], row[1], cid)
        if not name:
            name = f"{kind}-{cid[:8]}"
        elif not NAME_TOKEN.match(name):
            raise ValueError(f"bad {kind} name {name!r}")
        clash = self._conn.execute(
            f"SELECT id FROM {kind} WHERE name = ?", (name,)
        ).fetchone()
        if clash is not None:
            raise NameCollision(f"{kind} {name!r} already bound to {clash[0][:8]}…")
        with self._conn:
            self._conn.execute(
                f"INSERT INTO {kind} (id, name, code) VALUES (?, ?, ?)",
                (cid, name, normalized),
            )
        return CodeEntity(kind, name, normalized, cid)

    def _resolve_code(self, kind: str, name: str, codes: dict[str, str] | None) -> str:
        row = self._conn.execute(
            f"SELECT id FROM {kind} WHERE name = ?", (name,)
        ).fetchone()
        if row is not None:
            return row[0]
        if codes and kind in codes:
            return self.upsert_code(kind, name, codes[kind]).id
        raise UnknownCode(f"{kind} {name!r} is not registered and no code was given")

    # -- ingestion -----------------------------------------------------------

    def ingest_trial(
        self, doc: TrialDocument, on_conflict: str = "reject"
    ) -> IngestReport:
        """Write one stat row per epoch entry, atomically for the document.

        Exact duplicates are skipped and counted; a key that exists with
        different values either aborts the whole document (reject) or is
        replaced (overwrite).
        """
        if on_conflict not in ("reject", "overwrite"):
            raise ValueError(f"on_conflict must be reject|overwrite, got {on_conflict!r}")
        metric_id = self._resolve_code("metric", doc.config.metric, doc.codes)
        nn_id = self._resolve_code("nn", doc.config.nn, doc.codes)
        transform_id = self._resolve_code("transform", doc.transform, doc.codes)
        entries_json = canonical_prm(doc.prm)
        phash = prm_hash(doc.prm)
        report = IngestReport()
        with self._conn:
            self._conn.execute(
                "INSERT OR IGNORE INTO prm (hash, entries) VALUES (?, ?)",
                (phash, entries_json),
            )
            for entry in doc.epochs:
                key = (
                    doc.config.task,
                    doc.config.dataset,
                    metric_id,
                    nn_id,
                    transform_id,
                    phash,
                    entry.epoch,
                )
                existing = self._conn.execute(
                    "SELECT accuracy, duration_ns FROM stat WHERE task=? AND dataset=?"
                    " AND metric_id=? AND nn_id=? AND transform_id=? AND prm_hash=?"
                    " AND epoch=?",
                    key,
                ).fetchone()
                if existing is None:
                    self._conn.execute(
                        "INSERT INTO stat (task, dataset, metric_id, nn_id,"
                        " transform_id, prm_hash, epoch, accuracy, duration_ns, prm)"
                        " VALUES (?,?,?,?,?,?,?,?,?,?)",
                        key + (entry.accuracy, entry.duration_ns, entries_json),
                    )
                    report.inserted += 1
                elif existing == (entry.accuracy, entry.duration_ns):
                    report.duplicates += 1
                elif on_conflict == "reject":
                    # raising inside the with-block rolls the document back
                    raise ConflictError(
                        f"epoch {entry.epoch} of {doc.config} already stored with"
                        f" accuracy={existing[0]}, duration_ns={existing[1]}"
                    )
                else:
                    self._conn.execute(
                        "UPDATE stat SET accuracy=?, duration_ns=?, prm=?"
                        " WHERE task=? AND dataset=? AND metric_id=? AND nn_id=?"
                        " AND transform_id=? AND prm_hash=? AND epoch=?",
                        (entry.accuracy, entry.duration_ns, entries_json) + key,
                    )
                    report.conflicts += 1
        return report

    def load_fixture(self, fixture: str | Path) -> IngestReport:
        """Load a reference-result table: one stat row per entry, epoch 1,
        sentinel prm hash, model size and input resolution kept as prm
        entries."""
        try:
            raw = json.loads(Path(fixture).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedFixture(f"cannot read fixture {fixture}: {exc}") from exc
        if not isinstance(raw, list):
            raise MalformedFixture("fixture must be a JSON array")
        report = IngestReport()
        transform = self.upsert_code(
            "transform", FIXTURE_TRANSFORM, placeholder_code("transform", FIXTURE_TRANSFORM)
        )
        for i, row in enumerate(raw):
            if not isinstance(row, dict) or set(row) != FIXTURE_KEYS:
                raise MalformedFixture(f"entry {i}: keys {sorted(row)!r}")
            try:
                config = ConfigId(row["task"], row["dataset"], row["metric"], row["nn"])
            except ValueError as exc:
                raise MalformedFixture(f"entry {i}: {exc}") from exc
            value = row["value"]
            if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
                raise MalformedFixture(f"entry {i}: value {value!r} outside [0, 1]")
            entries = validate_prm_entries(
                {"params_millions": row["params_millions"], "resolution": row["resolution"]}
            )
            metric = self.upsert_code(
                "metric", config.metric, placeholder_code("metric", config.metric)
            )
            nn = self.upsert_code("nn", config.nn, placeholder_code("nn", config.nn))
            key = (
                config.task,
                config.dataset,
                metric.id,
                nn.id,
                transform.id,
                FIXTURE_PRM_HASH,
                1,
            )
            existing = self._conn.execute(
                "SELECT accuracy, duration_ns FROM stat WHERE task=? AND dataset=?"
                " AND metric_id=? AND nn_id=? AND transform_id=? AND prm_hash=?"
                " AND epoch=?",
                key,
            ).fetchone()
            entries_json = canonical_prm(entries)
            with self._conn:
                if existing is None:
                    self._conn.execute(
                        "INSERT INTO stat (task, dataset, metric_id, nn_id,"
                        " transform_id, prm_hash, epoch, accuracy, duration_ns, prm)"
                        " VALUES (?,?,?,?,?,?,?,?,?,?)",
                        key + (float(value), 0, entries_json),
                    )
                    report.inserted += 1
                elif existing == (float(value), 0):
                    report.duplicates += 1
                else:
                    raise ConflictError(
                        f"entry {i} ({config}) already stored with different value"
                    )
        return report

    # -- queries ---------------------------------------------------------------

    def query_data(
        self,
        task: str | None = None,
        dataset: str | None = None,
        metric: str | None = None,
        nn: str | None = None,
        only_best_accuracy: bool = False,
    ) -> list[ResultRow]:
        """Join stat rows with their code tables; filters are conjunctive
        equality filters on names. With only_best_accuracy, keep one row of
        maximal accuracy per (task, dataset, metric, nn)."""
        clauses = []
        args: list[str] = []
        for column, value in (
            ("s.task", task),
            ("s.dataset", dataset),
            ("m.name", metric),
            ("n.name", nn),
        ):
            if value is not None:
                clauses.append(f"{column} = ?")
                args.append(value)
        where = f" WHERE {' AND '.join(clauses)}" if clauses else ""
        sql = (
            "SELECT s.task, s.dataset, m.name, m.code, n.name, n.code,"
            " s.epoch, s.accuracy, s.duration_ns, s.prm, t.code, s.prm_hash"
            " FROM stat s"
            " JOIN metric m ON m.id = s.metric_id"
            " JOIN nn n ON n.id = s.nn_id"
            " JOIN transform t ON t.id = s.transform_id"
            f"{where}"
            " ORDER BY s.task, s.dataset, m.name, n.name, s.epoch, s.prm_hash"
        )
        picked: list[tuple[ResultRow, str]] = []
        for rec in self._conn.execute(sql, args):
            row = ResultRow(
                task=rec[0],
                dataset=rec[1],
                metric=rec[2],
                metric_code=rec[3],
                nn=rec[4],
                nn_code=rec[5],
                epoch=rec[6],
                accuracy=rec[7],
                duration=rec[8],
                prm=json.loads(rec[9]),
                transform_code=rec[10],
            )
            picked.append((row, rec[11]))
        if only_best_accuracy:
            return _pick_best(picked)
        return [row for row, _ in picked]


def _pick_best(rows: Iterable[tuple[ResultRow, str]]) -> list[ResultRow]:
    """One row per (task, dataset, metric, nn): max accuracy, ties broken by
    lowest epoch, then lexicographically lowest prm hash."""
    best: dict[tuple[str, str, str, str], tuple[ResultRow, str]] = {}
    order: list[tuple[str, str, str, str]] = []
    for row, phash in rows:
        group = (row.task, row.dataset, row.metric, row.nn)
        if group not in best:
            best[group] = (row, phash)
            order.append(group)
            continue
        cur, cur_hash = best[group]
        if (-row.accuracy, row.epoch, phash) < (-cur.accuracy, cur.epoch, cur_hash):
            best[group] = (row, phash)
    return [best[group][0] for group in sorted(order)]


def select_best(rows: Sequence[ResultRow]) -> list[ResultRow]:
    """In-memory only-best selection with the same tie-breaking as
    query_data; the tie-break hash is recomputed from each row's entries."""
    return _pick_best((row, prm_hash(row.prm)) for row in rows)


def open_registry(path: str | Path) -> Registry:
    return Registry(path)
