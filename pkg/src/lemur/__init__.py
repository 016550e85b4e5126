"""Benchmarking and experiment-registry engine: config grammar, TPE search,
subprocess trainer protocol, SQLite trial store, task metrics, aggregation,
and SVG/CSV/XLSX reporting."""

from __future__ import annotations

import os
from pathlib import Path

from .config import ConfigId, RangeArgs, format_config, parse_config, space_from_args
from .registry import (
    IngestReport,
    Registry,
    ResultRow,
    TrialDocument,
    open_registry,
)
from .space import Categorical, IntPow2, LogUniform, SearchSpace, Uniform
from .tpe import Study

__version__ = "0.1.0"

__all__ = [
    "Categorical",
    "ConfigId",
    "IngestReport",
    "IntPow2",
    "LogUniform",
    "RangeArgs",
    "Registry",
    "ResultRow",
    "SearchSpace",
    "Study",
    "TrialDocument",
    "Uniform",
    "data",
    "format_config",
    "open_registry",
    "parse_config",
    "space_from_args",
]


def data(
    db: str | Path | None = None,
    task: str | None = None,
    dataset: str | None = None,
    metric: str | None = None,
    nn: str | None = None,
    only_best_accuracy: bool = False,
) -> list[ResultRow]:
    """Query the store in one call; db defaults to $LEMUR_DB or ./lemur.db."""
    path = Path(db or os.environ.get("LEMUR_DB") or "lemur.db")
    with Registry(path) as registry:
        return registry.query_data(
            task=task,
            dataset=dataset,
            metric=metric,
            nn=nn,
            only_best_accuracy=only_best_accuracy,
        )
