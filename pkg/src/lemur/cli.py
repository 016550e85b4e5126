"""Command-line surface: run studies, ingest trial documents, load the
reference table, query, aggregate, plot, and export.

Exit codes: 0 success; 2 malformed config/ranges/inputs; 3 plugin failure at
handshake; 1 anything else. stdout carries only machine-readable payloads
(JSON or CSV); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
from importlib import resources
from pathlib import Path

from .config import (
    EmptyChoiceSet,
    MalformedConfig,
    RangeArgs,
    parse_config,
    space_from_args,
)
from .export import (
    EmptyWorkbook,
    export_workbook,
    workbook_from_agg,
    workbook_from_rows,
    write_csv,
)
from .harness import (
    HandshakeFailed,
    HarnessError,
    PluginDescriptor,
    StudyRun,
    UnsupportedSpace,
    default_checkpoint_path,
    run_study,
)
from .plots import PLOT_KINDS, EmptySeries, plotspec_from_rows, render_svg
from .registry import (
    ConflictError,
    CorruptStore,
    IoError,
    MalformedFixture,
    NameCollision,
    Registry,
    ResultRow,
    TrialDocument,
    UnknownCode,
)
from .stats import aggregate

log = logging.getLogger("lemur")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_HANDSHAKE = 3

DEFAULT_DB = "lemur.db"
BUILTIN_PLUGINS = ("reference", "stub")


def _resolve_db(value: str | None) -> Path:
    return Path(value or os.environ.get("LEMUR_DB") or DEFAULT_DB)


def _parse_shape(text: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"shape must be comma-separated integers, got {text!r}")
    return shape


def _plugin_command(value: str) -> tuple[str, ...]:
    tokens = shlex.split(value)
    if not tokens:
        raise ValueError("empty plugin command")
    if tokens[0] in BUILTIN_PLUGINS:
        return (sys.executable, "-m", f"lemur.plugins.{tokens[0]}", *tokens[1:])
    return tuple(tokens)


def _row_dict(row: ResultRow) -> dict:
    return {column: getattr(row, column) for column in ResultRow.COLUMNS}


def _filters(args: argparse.Namespace) -> dict:
    return {
        "task": args.task,
        "dataset": args.dataset,
        "metric": args.metric,
        "nn": args.nn,
    }


def _require_db(path: Path) -> None:
    if not path.exists():
        raise FileNotFoundError(f"no store at {path}")


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = parse_config(args.config)
        ranges = RangeArgs(
            min_learning_rate=args.min_learning_rate,
            max_learning_rate=args.max_learning_rate,
            min_batch_binary_power=args.min_batch_binary_power,
            max_batch_binary_power=args.max_batch_binary_power,
            min_momentum=args.min_momentum,
            max_momentum=args.max_momentum,
            transform=args.transform,
            trials=args.trials,
            max_epochs=args.epochs,
        )
        space = space_from_args(ranges)
        in_shape = _parse_shape(args.in_shape)
        out_shape = _parse_shape(args.out_shape)
        command = _plugin_command(args.plugin)
    except (MalformedConfig, EmptyChoiceSet, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE

    db = _resolve_db(args.db)
    try:
        with Registry(db) as registry:
            descriptor = PluginDescriptor(
                command=command,
                nn_name=config.nn,
                in_shape=in_shape,
                out_shape=out_shape,
            )
            checkpoint = (
                Path(args.checkpoint)
                if args.checkpoint
                else default_checkpoint_path(db, config, args.seed)
            )
            run = StudyRun(
                config=config,
                space=space,
                trials=ranges.trials,
                max_epochs=ranges.max_epochs,
                seed=args.seed,
                registry=registry,
                plugin=descriptor,
                device=args.device,
                timeout_s=args.timeout,
                checkpoint_path=checkpoint,
            )
            summary = run_study(run)
    except (HandshakeFailed, UnsupportedSpace) as exc:
        log.error("plugin handshake failed: %s", exc)
        return EXIT_HANDSHAKE
    except (HarnessError, CorruptStore, IoError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    print(json.dumps(summary.to_dict()))
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace) -> int:
    db = _resolve_db(args.db)
    inserted = duplicates = conflicts = 0
    try:
        with Registry(db) as registry:
            for file in args.files:
                try:
                    doc = TrialDocument.from_json(Path(file).read_text(encoding="utf-8"))
                except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    log.error("%s: %s", file, exc)
                    return EXIT_USAGE
                report = registry.ingest_trial(
                    doc, on_conflict="overwrite" if args.force else "reject"
                )
                inserted += report.inserted
                duplicates += report.duplicates
                conflicts += report.conflicts
    except (UnknownCode, NameCollision, ConflictError, CorruptStore, IoError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    print(json.dumps({"inserted": inserted, "duplicates": duplicates, "conflicts": conflicts}))
    return EXIT_OK


def cmd_fixture(args: argparse.Namespace) -> int:
    db = _resolve_db(args.db)
    if args.file:
        fixture = Path(args.file)
    else:
        fixture = Path(str(resources.files("lemur") / "fixtures" / "reference_tables.json"))
    try:
        with Registry(db) as registry:
            report = registry.load_fixture(fixture)
    except MalformedFixture as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (NameCollision, ConflictError, CorruptStore, IoError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    print(
        json.dumps(
            {
                "inserted": report.inserted,
                "duplicates": report.duplicates,
                "conflicts": report.conflicts,
            }
        )
    )
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    db = _resolve_db(args.db)
    try:
        _require_db(db)
        with Registry(db) as registry:
            rows = registry.query_data(only_best_accuracy=args.best, **_filters(args))
    except (FileNotFoundError, CorruptStore, IoError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    if args.format == "csv":
        write_csv(rows, sys.stdout)
    else:
        print(json.dumps([_row_dict(row) for row in rows]))
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    db = _resolve_db(args.db)
    try:
        _require_db(db)
        with Registry(db) as registry:
            rows = registry.query_data(**_filters(args))
    except (FileNotFoundError, CorruptStore, IoError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    payload = [
        {
            "task": agg.key.task,
            "dataset": agg.key.dataset,
            "nn": agg.key.nn,
            "epoch": agg.key.epoch,
            "n": agg.n,
            "mean": agg.mean,
            "std": agg.std,
            "mean_duration_ns": agg.mean_duration_ns,
        }
        for agg in aggregate(rows)
    ]
    print(json.dumps(payload))
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    db = _resolve_db(args.db)
    out_dir = Path(args.out)
    try:
        _require_db(db)
        with Registry(db) as registry:
            rows = registry.query_data(**_filters(args))
        spec = plotspec_from_rows(args.kind, rows)
        document = render_svg(spec)
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / f"{args.kind}.svg"
        target.write_text(document, encoding="utf-8")
    except (FileNotFoundError, EmptySeries, CorruptStore, IoError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    print(json.dumps([str(target)]))
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    db = _resolve_db(args.db)
    out = Path(args.out)
    try:
        _require_db(db)
        with Registry(db) as registry:
            rows = registry.query_data(**_filters(args))
        plot_files = []
        for kind in PLOT_KINDS:
            try:
                document = render_svg(plotspec_from_rows(kind, rows))
            except (EmptySeries, ValueError) as exc:
                log.warning("skipping %s: %s", kind, exc)
                continue
            target = out.parent / f"{out.stem}_{kind}.svg"
            target.write_text(document, encoding="utf-8")
            plot_files.append(target.name)
        if args.mode == "aggregated":
            spec = workbook_from_agg(aggregate(rows), plot_files)
        else:
            spec = workbook_from_rows(rows, plot_files)
        export_workbook(spec, out)
    except (FileNotFoundError, EmptyWorkbook, CorruptStore, IoError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    print(json.dumps({"workbook": str(out), "plots": plot_files}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lemur",
        description="benchmark runner with TPE search, trial store, and reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    defaults = RangeArgs()

    def add_db(p: argparse.ArgumentParser) -> None:
        p.add_argument("--db", help=f"store path (default $LEMUR_DB or ./{DEFAULT_DB})")

    def add_filters(p: argparse.ArgumentParser) -> None:
        for name in ("task", "dataset", "metric", "nn"):
            p.add_argument(f"--{name}")

    run = sub.add_parser("run", help="run a study against a trainer plugin")
    run.add_argument("-c", "--config", required=True,
                     help="task_dataset_metric_nn identifier")
    run.add_argument("--min_learning_rate", type=float, default=defaults.min_learning_rate)
    run.add_argument("--max_learning_rate", type=float, default=defaults.max_learning_rate)
    run.add_argument("--min_batch_binary_power", type=int, default=defaults.min_batch_binary_power)
    run.add_argument("--max_batch_binary_power", type=int, default=defaults.max_batch_binary_power)
    run.add_argument("--min_momentum", type=float, default=defaults.min_momentum)
    run.add_argument("--max_momentum", type=float, default=defaults.max_momentum)
    run.add_argument("--transform", help="pin the transform choice")
    run.add_argument("--trials", type=int, default=defaults.trials)
    run.add_argument("--epochs", type=int, default=defaults.max_epochs)
    run.add_argument("--plugin", default="reference",
                     help="builtin name (reference, stub) or a launch command")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--device", default="cpu")
    run.add_argument("--timeout", type=float, default=300.0,
                     help="per-epoch plugin deadline in seconds")
    run.add_argument("--in_shape", default="2", help="comma-separated input shape")
    run.add_argument("--out_shape", default="3", help="comma-separated output shape")
    run.add_argument("--checkpoint", help="checkpoint path override")
    add_db(run)
    run.set_defaults(handler=cmd_run)

    ingest = sub.add_parser("ingest", help="ingest trial document JSON files")
    ingest.add_argument("files", nargs="+")
    ingest.add_argument("--force", action="store_true",
                        help="overwrite rows whose values changed")
    add_db(ingest)
    ingest.set_defaults(handler=cmd_ingest)

    fixture = sub.add_parser("fixture", help="load the bundled reference table")
    fixture.add_argument("--file", help="fixture file override")
    add_db(fixture)
    fixture.set_defaults(handler=cmd_fixture)

    query = sub.add_parser("query", help="print stored rows")
    add_filters(query)
    query.add_argument("--best", action="store_true",
                       help="keep only the best row per (task, dataset, metric, nn)")
    query.add_argument("--format", choices=("json", "csv"), default="json")
    add_db(query)
    query.set_defaults(handler=cmd_query)

    stats = sub.add_parser("stats", help="print per-group aggregates")
    add_filters(stats)
    add_db(stats)
    stats.set_defaults(handler=cmd_stats)

    plot = sub.add_parser("plot", help="render one plot kind to SVG")
    plot.add_argument("--kind", required=True, choices=PLOT_KINDS)
    plot.add_argument("--out", default=".", help="output directory")
    add_filters(plot)
    add_db(plot)
    plot.set_defaults(handler=cmd_plot)

    export = sub.add_parser("export", help="write an XLSX workbook plus plots")
    export.add_argument("--mode", choices=("aggregated", "raw"), default="aggregated")
    export.add_argument("--out", required=True, help="workbook path")
    add_filters(export)
    add_db(export)
    export.set_defaults(handler=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
