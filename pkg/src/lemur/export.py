"""Tabular exports: CSV for the 11-column query rows and XLSX workbooks
built directly as ZIP + sheet XML, so output stays bit-inspectable without a
spreadsheet dependency. Plots are written as standalone SVG files and listed
on a manifest sheet instead of being embedded."""

from __future__ import annotations

import csv
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .registry import IoError, ResultRow, Scalar, validate_prm_entries
from .stats import AggRow

MAX_SHEET_NAME = 31

AGGREGATED_COLUMNS = (
    "task",
    "dataset",
    "nn",
    "epoch",
    "n",
    "mean_accuracy",
    "std_accuracy",
    "mean_duration_ns",
    "mean_duration_s",
)


class EmptyWorkbook(ValueError):
    """Workbook has no data rows to write."""


def encode_prm(entries: dict[str, Scalar]) -> str:
    """Flat `key=value;...` cell text, keys sorted."""
    validate_prm_entries(entries)
    return ";".join(f"{k}={entries[k]}" for k in sorted(entries))


def decode_prm(text: str) -> dict[str, Scalar]:
    """Inverse of encode_prm; values re-typed as int, then float, else token."""
    entries: dict[str, Scalar] = {}
    if not text:
        return entries
    for pair in text.split(";"):
        key, _, raw = pair.partition("=")
        try:
            entries[key] = int(raw)
        except ValueError:
            try:
                entries[key] = float(raw)
            except ValueError:
                entries[key] = raw
    return entries


def write_csv(rows: Sequence[ResultRow], handle) -> None:
    """Write query rows to an open text handle with the exact 11-column
    header, RFC-4180 quoted."""
    writer = csv.writer(handle)
    writer.writerow(ResultRow.COLUMNS)
    for row in rows:
        writer.writerow(
            (
                row.task,
                row.dataset,
                row.metric,
                row.metric_code,
                row.nn,
                row.nn_code,
                row.epoch,
                repr(row.accuracy),
                row.duration,
                encode_prm(row.prm),
                row.transform_code,
            )
        )


def export_csv(rows: Sequence[ResultRow], path: str | Path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            write_csv(rows, handle)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def import_csv(path: str | Path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader))
        if header != ResultRow.COLUMNS:
            raise ValueError(f"unexpected header {header!r}")
        rows = []
        for rec in reader:
            rows.append(
                ResultRow(
                    task=rec[0],
                    dataset=rec[1],
                    metric=rec[2],
                    metric_code=rec[3],
                    nn=rec[4],
                    nn_code=rec[5],
                    epoch=int(rec[6]),
                    accuracy=float(rec[7]),
                    duration=int(rec[8]),
                    prm=decode_prm(rec[9]),
                    transform_code=rec[10],
                )
            )
    return rows


@dataclass(frozen=True)
class WorkbookSpec:
    """Sheets are named tabular blocks whose first row is the header."""

    mode: str
    sheets: dict[str, list[list[Scalar]]]
    plot_manifest: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in ("aggregated", "raw"):
            raise ValueError(f"mode must be aggregated|raw, got {self.mode!r}")
        for name in self.sheets:
            if not name or len(name) > MAX_SHEET_NAME:
                raise ValueError(f"bad sheet name {name!r}")
        object.__setattr__(self, "plot_manifest", tuple(self.plot_manifest))


def _manifest_sheet(manifest: Sequence[str]) -> list[list[Scalar]]:
    return [["plot_file"], *[[name] for name in manifest]]


def workbook_from_agg(agg: Sequence[AggRow], manifest: Sequence[str] = ()) -> WorkbookSpec:
    summary: list[list[Scalar]] = [list(AGGREGATED_COLUMNS)]
    for row in agg:
        summary.append(
            [
                row.key.task,
                row.key.dataset,
                row.key.nn,
                row.key.epoch,
                row.n,
                row.mean,
                row.std,
                row.mean_duration_ns,
                row.mean_duration_ns / 1e9,
            ]
        )
    return WorkbookSpec(
        mode="aggregated",
        sheets={"summary": summary, "plots": _manifest_sheet(manifest)},
        plot_manifest=tuple(manifest),
    )


def workbook_from_rows(rows: Sequence[ResultRow], manifest: Sequence[str] = ()) -> WorkbookSpec:
    raw: list[list[Scalar]] = [list(ResultRow.COLUMNS)]
    for row in rows:
        raw.append(
            [
                row.task,
                row.dataset,
                row.metric,
                row.metric_code,
                row.nn,
                row.nn_code,
                row.epoch,
                row.accuracy,
                row.duration,
                encode_prm(row.prm),
                row.transform_code,
            ]
        )
    return WorkbookSpec(
        mode="raw",
        sheets={"raw": raw, "plots": _manifest_sheet(manifest)},
        plot_manifest=tuple(manifest),
    )


# -- minimal XLSX assembly ----------------------------------------------------

_CONTENT_TYPES = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">
<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>
<Default Extension="xml" ContentType="application/xml"/>
<Override PartName="/xl/workbook.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>
{overrides}
</Types>
"""

_ROOT_RELS = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="xl/workbook.xml"/>
</Relationships>
"""

_SHEET_OVERRIDE = (
    '<Override PartName="/xl/worksheets/sheet{i}.xml" ContentType='
    '"application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>'
)


def _column_ref(index: int) -> str:
    # 0 -> A, 25 -> Z, 26 -> AA
    ref = ""
    index += 1
    while index:
        index, rem = divmod(index - 1, 26)
        ref = chr(ord("A") + rem) + ref
    return ref


def _cell_xml(ref: str, value: Scalar) -> str:
    if isinstance(value, bool) or isinstance(value, str):
        return f'<c r="{ref}" t="inlineStr"><is><t xml:space="preserve">{escape(str(value))}</t></is></c>'
    return f'<c r="{ref}"><v>{value!r}</v></c>'


def _sheet_xml(rows: Sequence[Sequence[Scalar]]) -> str:
    body = []
    for r, row in enumerate(rows, start=1):
        cells = "".join(
            _cell_xml(f"{_column_ref(c)}{r}", value) for c, value in enumerate(row)
        )
        body.append(f'<row r="{r}">{cells}</row>')
    return (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        '<worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main">'
        f"<sheetData>{''.join(body)}</sheetData></worksheet>"
    )


def _workbook_xml(names: Sequence[str]) -> str:
    sheets = "".join(
        f'<sheet name="{escape(name)}" sheetId="{i}" r:id="rId{i}"/>'
        for i, name in enumerate(names, start=1)
    )
    return (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        '<workbook xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" '
        'xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships">'
        f"<sheets>{sheets}</sheets></workbook>"
    )


def _workbook_rels(count: int) -> str:
    rels = "".join(
        f'<Relationship Id="rId{i}" Type="http://schemas.openxmlformats.org/'
        f'officeDocument/2006/relationships/worksheet" Target="worksheets/sheet{i}.xml"/>'
        for i in range(1, count + 1)
    )
    return (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
        f"{rels}</Relationships>"
    )


def export_workbook(spec: WorkbookSpec, path: str | Path) -> None:
    """Write the workbook as an XLSX file.

    The mode's main sheet (`summary` or `raw`) must carry at least one data
    row below its header; the plot manifest may be empty.
    """
    main = "summary" if spec.mode == "aggregated" else "raw"
    if main not in spec.sheets or len(spec.sheets[main]) < 2:
        raise EmptyWorkbook(f"sheet {main!r} has no data rows")
    names = list(spec.sheets)
    overrides = "\n".join(_SHEET_OVERRIDE.format(i=i) for i in range(1, len(names) + 1))
    try:
        with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as archive:
            archive.writestr("[Content_Types].xml", _CONTENT_TYPES.format(overrides=overrides))
            archive.writestr("_rels/.rels", _ROOT_RELS)
            archive.writestr("xl/workbook.xml", _workbook_xml(names))
            archive.writestr("xl/_rels/workbook.xml.rels", _workbook_rels(len(names)))
            for i, name in enumerate(names, start=1):
                archive.writestr(f"xl/worksheets/sheet{i}.xml", _sheet_xml(spec.sheets[name]))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
