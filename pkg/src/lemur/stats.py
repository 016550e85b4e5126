"""Aggregation over query rows: group means/stds, rolling means, Pearson
correlations, best-per-model selection, and histograms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .registry import ResultRow, select_best

DEFAULT_ROLLING_WINDOW = 5
DEFAULT_HISTOGRAM_BINS = 20

# Width substituted when every sample is identical, so a histogram still has
# a nonzero range to bin over.
DEGENERATE_BIN_WIDTH = 1e-9


class LengthMismatch(ValueError):
    """Correlation inputs are not all the same length."""


class EmptyInput(ValueError):
    """Operation needs at least one value."""


@dataclass(frozen=True)
class GroupKey:
    task: str
    dataset: str
    nn: str
    epoch: int


@dataclass(frozen=True)
class AggRow:
    key: GroupKey
    n: int
    mean: float
    std: float
    mean_duration_ns: float


def aggregate(rows: Sequence[ResultRow]) -> list[AggRow]:
    """Group accuracy/duration by (task, dataset, nn, epoch).

    std is the sample standard deviation (divisor n-1), defined as 0.0 for
    singleton groups. Output is sorted by group key.
    """
    groups: dict[GroupKey, list[ResultRow]] = {}
    for row in rows:
        key = GroupKey(row.task, row.dataset, row.nn, row.epoch)
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups, key=lambda k: (k.task, k.dataset, k.nn, k.epoch)):
        members = groups[key]
        n = len(members)
        mean = math.fsum(r.accuracy for r in members) / n
        if n == 1:
            std = 0.0
        else:
            var = math.fsum((r.accuracy - mean) ** 2 for r in members) / (n - 1)
            std = math.sqrt(var)
        mean_duration = math.fsum(r.duration for r in members) / n
        out.append(AggRow(key, n, mean, std, mean_duration))
    return out


def rolling_mean(
    series: Sequence[tuple[int, float]], window: int = DEFAULT_ROLLING_WINDOW
) -> list[tuple[int, float]]:
    """Trailing rolling mean with min-periods 1, aligned to the input epochs."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    epochs = [e for e, _ in series]
    if any(b <= a for a, b in zip(epochs, epochs[1:])):
        raise ValueError("epochs must be strictly increasing")
    values = [v for _, v in series]
    out = []
    for i, epoch in enumerate(epochs):
        lo = max(0, i - window + 1)
        chunk = values[lo : i + 1]
        out.append((epoch, math.fsum(chunk) / len(chunk)))
    return out


def pearson_matrix(
    columns: dict[str, Sequence[float]],
) -> tuple[list[str], list[list[float | None]]]:
    """Pearson correlation matrix over the named columns.

    Returns (names, matrix); entries against a zero-variance column are None,
    the diagonal is 1.0, and defined entries are clipped to [-1, 1].
    """
    names = list(columns)
    lengths = {len(columns[name]) for name in names}
    if len(lengths) > 1:
        raise LengthMismatch(f"columns have differing lengths: {sorted(lengths)}")
    n = lengths.pop() if lengths else 0
    if n < 2:
        raise LengthMismatch("correlation needs vectors of length >= 2")

    means = {name: math.fsum(columns[name]) / n for name in names}
    centered = {name: [v - means[name] for v in columns[name]] for name in names}
    ss = {name: math.fsum(v * v for v in centered[name]) for name in names}

    matrix: list[list[float | None]] = []
    for a in names:
        row: list[float | None] = []
        for b in names:
            if a == b:
                row.append(1.0)
            elif ss[a] == 0.0 or ss[b] == 0.0:
                row.append(None)
            else:
                cov = math.fsum(x * y for x, y in zip(centered[a], centered[b]))
                r = cov / math.sqrt(ss[a] * ss[b])
                row.append(max(-1.0, min(1.0, r)))
        matrix.append(row)
    return names, matrix


def best_per_model(rows: Sequence[ResultRow]) -> list[ResultRow]:
    """Best-accuracy row per (task, dataset, metric, nn) group."""
    return select_best(rows)


def histogram(
    values: Sequence[float], bins: int = DEFAULT_HISTOGRAM_BINS
) -> list[tuple[float, float, int]]:
    """Equal-width bins over [min, max]; the last bin includes its right edge."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if not values:
        raise EmptyInput("histogram needs at least one value")
    lo = min(values)
    hi = max(values)
    if lo == hi:
        lo -= DEGENERATE_BIN_WIDTH / 2
        hi += DEGENERATE_BIN_WIDTH / 2
    width = (hi - lo) / bins
    counts = [0] * bins
    for v in values:
        idx = int((v - lo) / width)
        if idx >= bins:  # right edge of the last bin is inclusive
            idx = bins - 1
        counts[idx] += 1
    return [(lo + i * width, lo + (i + 1) * width, counts[i]) for i in range(bins)]
