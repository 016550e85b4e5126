import json
import sqlite3

import numpy as np
import pytest

import lemur
from lemur.config import ConfigId
from lemur.registry import (
    FIXTURE_PRM_HASH,
    CodeEntity,
    ConflictError,
    CorruptStore,
    EpochResult,
    MalformedFixture,
    NameCollision,
    Registry,
    TrialDocument,
    UnknownCode,
    canonical_prm,
    code_id,
    normalize_code,
    open_registry,
    placeholder_code,
    prm_hash,
)

from _factories import random_doc
from _oracles import best_rows_scan, prm_hash_independent


@pytest.fixture
def reg(tmp_path):
    with open_registry(tmp_path / "test.db") as r:
        yield r


def make_doc(accuracy=0.5, prm=None, nn="Net", transform="identity", epochs=None):
    prm = prm if prm is not None else {"lr": 0.1}
    epochs = epochs or [
        EpochResult(epoch=1, accuracy=accuracy, duration_ns=100),
        EpochResult(epoch=2, accuracy=min(1.0, accuracy + 0.1), duration_ns=110),
        EpochResult(epoch=3, accuracy=min(1.0, accuracy + 0.2), duration_ns=120),
    ]
    return TrialDocument(
        config=ConfigId("img-classification", "blobs", "acc", nn),
        transform=transform,
        prm=prm,
        epochs=tuple(epochs),
        codes={
            "nn": f"# model {nn}\n",
            "metric": "# metric acc\n",
            "transform": f"# transform {transform}\n",
        },
    )


# -- store lifecycle ---------------------------------------------------------


def test_open_creates_then_reopens(tmp_path):
    path = tmp_path / "a.db"
    with open_registry(path):
        pass
    assert path.exists()
    with open_registry(path):
        pass


def test_open_rejects_non_database(tmp_path):
    path = tmp_path / "junk.db"
    path.write_bytes(b"this is not a sqlite file, just bytes" * 40)
    with pytest.raises(CorruptStore):
        open_registry(path)


def test_open_rejects_foreign_schema(tmp_path):
    path = tmp_path / "other.db"
    conn = sqlite3.connect(path)
    conn.execute("CREATE TABLE nn (wrong TEXT)")
    conn.commit()
    conn.close()
    with pytest.raises(CorruptStore):
        open_registry(path)


# -- code identity ------------------------------------------------------------


def test_normalize_code_trailing_whitespace_and_newline():
    assert normalize_code("a = 1  \nb = 2") == "a = 1\nb = 2\n"
    assert normalize_code("a = 1\n") == "a = 1\n"
    assert code_id("a = 1   ") == code_id("a = 1\n")


def test_upsert_code_dedup_and_autoname(reg):
    first = reg.upsert_code("nn", "", "x = 1\n")
    again = reg.upsert_code("nn", "", "x = 1   ")
    assert first.id == again.id
    assert first.name == f"nn-{first.id[:8]}"


def test_upsert_code_name_reuse_conflicts(reg):
    reg.upsert_code("nn", "Alex", "a\n")
    with pytest.raises(NameCollision):
        reg.upsert_code("nn", "Alex", "b\n")


def test_upsert_code_same_content_new_name_returns_existing(reg):
    first = reg.upsert_code("metric", "acc", "m\n")
    again = reg.upsert_code("metric", "acc-renamed", "m\n")
    assert again == CodeEntity(kind="metric", name="acc", code_text="m\n", id=first.id)


# -- hyperparameter canonicalization ------------------------------------------


def test_canonical_prm_is_key_order_independent():
    a = canonical_prm({"lr": 0.1, "batch": 16})
    b = canonical_prm({"batch": 16, "lr": 0.1})
    assert a == b
    assert prm_hash({"lr": 0.1, "batch": 16}) == prm_hash_independent(
        {"batch": 16, "lr": 0.1}
    )


@pytest.mark.parametrize(
    "prm",
    [
        {"flag": True},
        {"lr": float("nan")},
        {"lr": float("inf")},
        {"mode": "has space"},
        {"mode": ""},
        {"": 1},
        {"bad key": 1},
        {"x": [1, 2]},
    ],
)
def test_canonical_prm_rejects(prm):
    with pytest.raises(ValueError):
        canonical_prm(prm)


# -- trial documents -----------------------------------------------------------


def test_document_json_round_trip():
    doc = make_doc(prm={"lr": 0.25, "batch": 8, "mode": "fast"})
    clone = TrialDocument.from_json(doc.to_json())
    assert clone == doc


@pytest.mark.parametrize(
    "epochs",
    [
        (),
        (EpochResult(epoch=0, accuracy=0.5, duration_ns=1),),
        (
            EpochResult(epoch=1, accuracy=0.5, duration_ns=1),
            EpochResult(epoch=1, accuracy=0.6, duration_ns=1),
        ),
        (
            EpochResult(epoch=2, accuracy=0.5, duration_ns=1),
            EpochResult(epoch=1, accuracy=0.6, duration_ns=1),
        ),
        (EpochResult(epoch=1, accuracy=1.5, duration_ns=1),),
        (EpochResult(epoch=1, accuracy=-0.1, duration_ns=1),),
        (EpochResult(epoch=1, accuracy=0.5, duration_ns=-5),),
    ],
)
def test_document_rejects_bad_epochs(epochs):
    with pytest.raises(ValueError):
        TrialDocument(
            config=ConfigId("t", "d", "m", "N"),
            transform="identity",
            prm={"lr": 0.1},
            epochs=epochs,
        )


# -- ingestion ------------------------------------------------------------------


def test_ingest_inserts_one_row_per_epoch(reg):
    report = reg.ingest_trial(make_doc())
    assert (report.inserted, report.duplicates, report.conflicts) == (3, 0, 0)
    rows = reg.query_data()
    assert len(rows) == 3
    assert [r.epoch for r in rows] == [1, 2, 3]


def test_ingest_is_idempotent(tmp_path):
    path = tmp_path / "idem.db"
    doc = make_doc()
    with open_registry(path) as reg:
        reg.ingest_trial(doc)
    first = path.read_bytes()
    with open_registry(path) as reg:
        report = reg.ingest_trial(doc)
    assert (report.inserted, report.duplicates, report.conflicts) == (0, 3, 0)
    assert path.read_bytes() == first


def test_ingest_conflict_rejects_whole_document(reg):
    reg.ingest_trial(make_doc(accuracy=0.5))
    clashing = make_doc(
        epochs=[
            EpochResult(epoch=1, accuracy=0.9, duration_ns=100),
            EpochResult(epoch=2, accuracy=0.6, duration_ns=110),
            EpochResult(epoch=3, accuracy=0.7, duration_ns=120),
            EpochResult(epoch=4, accuracy=0.8, duration_ns=130),
        ]
    )
    with pytest.raises(ConflictError):
        reg.ingest_trial(clashing)
    rows = reg.query_data()
    assert [r.epoch for r in rows] == [1, 2, 3]
    assert rows[0].accuracy == 0.5


def test_ingest_overwrite_counts_conflicts(reg):
    reg.ingest_trial(make_doc(accuracy=0.5))
    report = reg.ingest_trial(make_doc(accuracy=0.6), on_conflict="overwrite")
    assert report.conflicts == 3
    assert reg.query_data()[0].accuracy == 0.6


def test_ingest_duplicate_requires_equal_duration(reg):
    reg.ingest_trial(make_doc())
    bumped = make_doc(
        epochs=[
            EpochResult(epoch=1, accuracy=0.5, duration_ns=999),
            EpochResult(epoch=2, accuracy=0.6, duration_ns=110),
            EpochResult(epoch=3, accuracy=0.7, duration_ns=120),
        ]
    )
    with pytest.raises(ConflictError):
        reg.ingest_trial(bumped)


def test_ingest_unknown_code_without_source(reg):
    doc = make_doc()
    bare = TrialDocument(
        config=ConfigId(doc.config.task, doc.config.dataset, doc.config.metric, "NeverSeen"),
        transform=doc.transform,
        prm=doc.prm,
        epochs=doc.epochs,
    )
    with pytest.raises(UnknownCode):
        reg.ingest_trial(bare)


def test_ingest_resolves_known_names_without_source(reg):
    reg.ingest_trial(make_doc())
    doc = make_doc(prm={"lr": 0.9})
    bare = TrialDocument(
        config=doc.config,
        transform=doc.transform,
        prm={"lr": 0.9},
        epochs=doc.epochs,
    )
    report = reg.ingest_trial(bare)
    assert report.inserted == 3


def test_code_rows_are_foreign_key_protected(reg):
    reg.ingest_trial(make_doc())
    with pytest.raises(sqlite3.IntegrityError):
        with reg._conn:
            reg._conn.execute("DELETE FROM nn")


# -- queries -----------------------------------------------------------------


def test_query_filters_are_conjunctive(reg):
    reg.ingest_trial(make_doc(nn="A"))
    reg.ingest_trial(make_doc(nn="B", prm={"lr": 0.2}))
    assert len(reg.query_data()) == 6
    assert len(reg.query_data(nn="A")) == 3
    assert len(reg.query_data(nn="A", task="img-classification")) == 3
    assert reg.query_data(nn="A", dataset="nothere") == []


def test_query_rows_carry_code_and_prm(reg):
    reg.ingest_trial(make_doc(prm={"lr": 0.1, "batch": 16}))
    r = reg.query_data()[0]
    assert r.nn_code == "# model Net\n"
    assert r.metric_code == "# metric acc\n"
    assert r.transform_code == "# transform identity\n"
    assert r.prm == {"lr": 0.1, "batch": 16}


def test_only_best_prefers_high_accuracy_then_low_epoch(reg):
    reg.ingest_trial(
        make_doc(
            prm={"lr": 0.1},
            epochs=[
                EpochResult(epoch=1, accuracy=0.9, duration_ns=10),
                EpochResult(epoch=2, accuracy=0.9, duration_ns=10),
            ],
        )
    )
    (best,) = reg.query_data(only_best_accuracy=True)
    assert (best.accuracy, best.epoch) == (0.9, 1)


def test_only_best_breaks_full_tie_on_prm_hash(reg):
    prms = [{"lr": 0.1}, {"lr": 0.2}]
    for prm in prms:
        reg.ingest_trial(
            make_doc(
                prm=prm,
                epochs=[EpochResult(epoch=1, accuracy=0.8, duration_ns=10)],
            )
        )
    (best,) = reg.query_data(only_best_accuracy=True)
    want = min(prm_hash(p) for p in prms)
    assert prm_hash(best.prm) == want


def test_only_best_matches_scan_oracle(reg):
    rng = np.random.default_rng(5)
    for i in range(60):
        reg.ingest_trial(random_doc(rng, uid=i))
    winners = best_rows_scan(reg.query_data())
    got = reg.query_data(only_best_accuracy=True)
    assert len(got) == len(winners)
    for r in got:
        want = winners[(r.task, r.dataset, r.metric, r.nn)]
        assert (r.accuracy, r.epoch, prm_hash(r.prm)) == want


# -- published fixture ----------------------------------------------------------


def test_fixture_load_counts_and_values(reg, fixture_rows, fixture_path):
    report = reg.load_fixture(fixture_path)
    assert report.inserted == len(fixture_rows) == 46
    again = reg.load_fixture(fixture_path)
    assert again.duplicates == 46 and again.inserted == 0

    def value(nn):
        (r,) = [x for x in reg.query_data(nn=nn) if x.accuracy]
        return r.accuracy

    assert value("EfficientNet") == 0.9274
    assert value("AlexNet") == 0.8675
    assert value("UNet-1") == 0.4494
    assert value("FCOS") == 0.7394


def test_fixture_rows_use_sentinel_prm(reg, fixture_path):
    reg.load_fixture(fixture_path)
    rows = reg.query_data(nn="AlexNet")
    (r,) = rows
    assert r.epoch == 1 and r.duration == 0
    assert set(r.prm) == {"params_millions", "resolution"}
    cur = reg._conn.execute("SELECT DISTINCT prm_hash FROM stat")
    assert (FIXTURE_PRM_HASH,) in cur.fetchall()


def test_fixture_reuses_placeholder_code_entities(reg, fixture_path):
    # a study that already registered 'acc' must not block a later fixture load
    before = reg.upsert_code("metric", "acc", placeholder_code("metric", "acc"))
    reg.load_fixture(fixture_path)
    row = reg._conn.execute("SELECT id, code FROM metric WHERE name = 'acc'").fetchone()
    assert row == (before.id, placeholder_code("metric", "acc"))


def test_placeholder_code_rejects_unknown_kind():
    with pytest.raises(ValueError):
        placeholder_code("dataset", "blobs")


@pytest.mark.parametrize(
    "mutate",
    [
        lambda row: row.pop("value"),
        lambda row: row.update(value=1.2),
        lambda row: row.update(value=-0.1),
        lambda row: row.update(extra=1),
        lambda row: row.update(task=9),
    ],
)
def test_fixture_rejects_malformed_rows(reg, fixture_rows, tmp_path, mutate):
    rows = [dict(fixture_rows[0])]
    mutate(rows[0])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(rows))
    with pytest.raises(MalformedFixture):
        reg.load_fixture(path)


def test_fixture_rejects_unreadable_and_non_array(reg, tmp_path):
    with pytest.raises(MalformedFixture):
        reg.load_fixture(tmp_path / "missing.json")
    path = tmp_path / "obj.json"
    path.write_text("{}")
    with pytest.raises(MalformedFixture):
        reg.load_fixture(path)


@pytest.fixture
def fixture_rows():
    from importlib import resources

    text = (resources.files("lemur") / "fixtures" / "reference_tables.json").read_text()
    return json.loads(text)


@pytest.fixture
def fixture_path(fixture_rows, tmp_path):
    path = tmp_path / "tables.json"
    path.write_text(json.dumps(fixture_rows))
    return path


# -- package-level convenience ----------------------------------------------------


def test_data_env_var_and_filters(tmp_path, monkeypatch):
    path = tmp_path / "env.db"
    with open_registry(path) as reg:
        reg.ingest_trial(make_doc(nn="A"))
        reg.ingest_trial(make_doc(nn="B", prm={"lr": 0.3}))
    monkeypatch.setenv("LEMUR_DB", str(path))
    rows = lemur.data(nn="A")
    assert {r.nn for r in rows} == {"A"}
    best = lemur.data(only_best_accuracy=True)
    assert len(best) == 2
