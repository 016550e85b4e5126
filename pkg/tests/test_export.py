import io
import xml.etree.ElementTree as ET
import zipfile

import numpy as np
import pytest

from lemur.export import (
    AGGREGATED_COLUMNS,
    MAX_SHEET_NAME,
    EmptyWorkbook,
    WorkbookSpec,
    decode_prm,
    encode_prm,
    export_csv,
    export_workbook,
    import_csv,
    workbook_from_agg,
    workbook_from_rows,
    write_csv,
)
from lemur.registry import ResultRow, open_registry
from lemur.stats import aggregate

from _factories import random_result_rows

SHEET_NS = "{http://schemas.openxmlformats.org/spreadsheetml/2006/main}"


def sample_row():
    return ResultRow(
        task="img-classification",
        dataset="blobs",
        metric="acc",
        metric_code='# metric "acc"\nline2\n',
        nn="Net",
        nn_code="# model\n",
        epoch=1,
        accuracy=0.5,
        duration=12345,
        prm={"lr": 0.1, "batch": 16, "mode": "fast"},
        transform_code="# transform\n",
    )


# -- prm cell text ------------------------------------------------------------


def test_encode_prm_sorts_keys():
    assert encode_prm({"lr": 0.1, "batch": 16}) == "batch=16;lr=0.1"


def test_prm_round_trip_types():
    prm = {"lr": 0.1, "batch": 16, "mode": "fast-x"}
    assert decode_prm(encode_prm(prm)) == prm


def test_decode_prm_empty():
    assert decode_prm("") == {}


def test_encode_prm_validates():
    with pytest.raises(ValueError):
        encode_prm({"flag": True})


# -- CSV ------------------------------------------------------------------------


def test_csv_header_matches_row_columns():
    buf = io.StringIO()
    write_csv([], buf)
    header = buf.getvalue().strip().split(",")
    assert tuple(header) == ResultRow.COLUMNS
    assert len(header) == 11


def test_csv_round_trip_hundred_rows(tmp_path):
    rng = np.random.default_rng(8)
    rows = random_result_rows(rng, 100)
    path = tmp_path / "rows.csv"
    export_csv(rows, path)
    back = import_csv(path)
    assert back == rows


def test_csv_quotes_embedded_newlines_and_commas(tmp_path):
    row = sample_row()
    path = tmp_path / "one.csv"
    export_csv([row], path)
    (back,) = import_csv(path)
    assert back == row


def test_import_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        import_csv(path)


def test_export_csv_wraps_os_errors(tmp_path):
    from lemur.registry import IoError

    with pytest.raises(IoError):
        export_csv([], tmp_path / "missing-dir" / "rows.csv")


# -- workbook construction --------------------------------------------------------


def test_workbook_from_agg_shape():
    agg = aggregate([sample_row()])
    spec = workbook_from_agg(agg, manifest=("a.svg",))
    assert spec.mode == "aggregated"
    assert list(spec.sheets) == ["summary", "plots"]
    assert spec.sheets["summary"][0] == list(AGGREGATED_COLUMNS)
    assert len(spec.sheets["summary"]) == 2
    assert spec.sheets["plots"] == [["plot_file"], ["a.svg"]]
    assert spec.sheets["summary"][1][-1] == pytest.approx(12345 / 1e9)


def test_workbook_from_rows_shape():
    spec = workbook_from_rows([sample_row()])
    assert spec.mode == "raw"
    assert list(spec.sheets) == ["raw", "plots"]
    assert spec.sheets["raw"][0] == list(ResultRow.COLUMNS)
    assert spec.sheets["raw"][1][9] == encode_prm(sample_row().prm)


def test_workbook_spec_validation():
    with pytest.raises(ValueError):
        WorkbookSpec(mode="tabular", sheets={"s": [[1]]})
    with pytest.raises(ValueError):
        WorkbookSpec(mode="raw", sheets={"x" * (MAX_SHEET_NAME + 1): [[1]]})
    with pytest.raises(ValueError):
        WorkbookSpec(mode="raw", sheets={"": [[1]]})


# -- XLSX assembly ------------------------------------------------------------------


def sheet_rows(archive, member):
    root = ET.fromstring(archive.read(member))
    return root.findall(f"{SHEET_NS}sheetData/{SHEET_NS}row")


def test_workbook_file_structure(tmp_path):
    rng = np.random.default_rng(2)
    rows = random_result_rows(rng, 10)
    path = tmp_path / "out.xlsx"
    export_workbook(workbook_from_rows(rows, manifest=("p1.svg", "p2.svg")), path)
    with zipfile.ZipFile(path) as archive:
        names = set(archive.namelist())
        assert "[Content_Types].xml" in names
        assert "_rels/.rels" in names
        assert "xl/workbook.xml" in names
        assert "xl/_rels/workbook.xml.rels" in names
        workbook = ET.fromstring(archive.read("xl/workbook.xml"))
        sheet_names = [s.get("name") for s in workbook.iter(f"{SHEET_NS}sheet")]
        assert sheet_names == ["raw", "plots"]
        assert len(sheet_rows(archive, "xl/worksheets/sheet1.xml")) == 11
        assert len(sheet_rows(archive, "xl/worksheets/sheet2.xml")) == 3


def test_aggregated_workbook_sheet_names(tmp_path):
    agg = aggregate([sample_row()])
    path = tmp_path / "agg.xlsx"
    export_workbook(workbook_from_agg(agg), path)
    with zipfile.ZipFile(path) as archive:
        workbook = ET.fromstring(archive.read("xl/workbook.xml"))
        names = [s.get("name") for s in workbook.iter(f"{SHEET_NS}sheet")]
        assert names == ["summary", "plots"]


def test_fixture_export_carries_published_value(tmp_path):
    import json
    from importlib import resources

    table = (resources.files("lemur") / "fixtures" / "reference_tables.json").read_text()
    fixture = tmp_path / "tables.json"
    fixture.write_text(table)
    with open_registry(tmp_path / "f.db") as reg:
        reg.load_fixture(fixture)
        rows = reg.query_data(task="img-classification")
    path = tmp_path / "fixture.xlsx"
    export_workbook(workbook_from_rows(rows), path)
    with zipfile.ZipFile(path) as archive:
        text = archive.read("xl/worksheets/sheet1.xml").decode()
    assert "AlexNet" in text
    assert "0.8675" in text


def test_empty_workbook_rejected(tmp_path):
    with pytest.raises(EmptyWorkbook):
        export_workbook(workbook_from_rows([]), tmp_path / "empty.xlsx")
    with pytest.raises(EmptyWorkbook):
        export_workbook(workbook_from_agg([]), tmp_path / "empty.xlsx")


def test_cells_preserve_types(tmp_path):
    path = tmp_path / "typed.xlsx"
    export_workbook(workbook_from_rows([sample_row()]), path)
    with zipfile.ZipFile(path) as archive:
        root = ET.fromstring(archive.read("xl/worksheets/sheet1.xml"))
    data_row = root.findall(f"{SHEET_NS}sheetData/{SHEET_NS}row")[1]
    cells = {c.get("r"): c for c in data_row.iter(f"{SHEET_NS}c")}
    assert cells["A2"].get("t") == "inlineStr"
    assert cells["G2"].get("t") is None
    assert cells["G2"].find(f"{SHEET_NS}v").text == "1"
    assert cells["H2"].find(f"{SHEET_NS}v").text == "0.5"
