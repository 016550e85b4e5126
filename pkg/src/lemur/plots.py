"""Standalone SVG renderers for the report plot families.

Every plot is a self-contained SVG 1.1 document with a viewBox. Scatter
kinds mark each data point with a ``class="marker"`` element so document
structure stays checkable by parsing; styling constants are fixed here and
deliberately minimal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .stats import histogram, pearson_matrix, rolling_mean

WIDTH = 640
HEIGHT = 480
MARGIN = 60

SCATTER_KINDS = ("scatter_acc_epoch", "scatter_acc_duration")
PLOT_KINDS = SCATTER_KINDS + (
    "line_acc_time",
    "box_acc_epoch",
    "histogram_acc",
    "rolling_mean",
    "mean_std_band",
    "corr_heatmap",
    "duration_distribution",
)

NS_PER_SECOND = 1e9


class EmptySeries(ValueError):
    """Plot has no data to draw."""


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    series: dict[str, tuple[float, ...]]
    title: str = ""
    x_label: str = ""
    y_label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}")
        object.__setattr__(
            self,
            "series",
            {name: tuple(values) for name, values in self.series.items()},
        )


# vectors each kind requires; box/heatmap take arbitrarily named groups/columns
_REQUIRED = {
    "scatter_acc_epoch": ("x", "y"),
    "scatter_acc_duration": ("x", "y"),
    "line_acc_time": ("x", "y"),
    "rolling_mean": ("x", "y"),
    "mean_std_band": ("x", "mean", "std"),
    "histogram_acc": ("values",),
    "duration_distribution": ("values",),
}


def _check(spec: PlotSpec) -> None:
    required = _REQUIRED.get(spec.kind)
    if required is not None:
        for name in required:
            if name not in spec.series or not spec.series[name]:
                raise EmptySeries(f"{spec.kind} needs a non-empty {name!r} vector")
        lengths = {len(spec.series[name]) for name in required}
        if len(lengths) > 1:
            raise ValueError(f"{spec.kind} vectors differ in length: {lengths}")
    else:
        if not spec.series or all(not v for v in spec.series.values()):
            raise EmptySeries(f"{spec.kind} has no data")


def tukey_box_stats(values: Sequence[float]) -> dict:
    """Median, linear-interpolation quartiles, 1.5*IQR whiskers, outliers."""
    if not values:
        raise EmptySeries("box needs at least one value")
    arr = np.asarray(values, dtype=float)
    q1, median, q3 = (float(np.percentile(arr, p)) for p in (25, 50, 75))
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    return {
        "median": median,
        "q1": q1,
        "q3": q3,
        "whisker_lo": float(inside.min()),
        "whisker_hi": float(inside.max()),
        "outliers": [float(v) for v in arr[(arr < lo_fence) | (arr > hi_fence)]],
    }


class _Frame:
    """Maps data coordinates into the plot area, padding degenerate ranges."""

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        self.x_lo, self.x_hi = self._padded(min(xs), max(xs))
        self.y_lo, self.y_hi = self._padded(min(ys), max(ys))

    @staticmethod
    def _padded(lo: float, hi: float) -> tuple[float, float]:
        if lo == hi:
            pad = abs(lo) * 0.05 or 0.5
            return lo - pad, hi + pad
        return lo, hi

    def x(self, v: float) -> float:
        frac = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return MARGIN + frac * (WIDTH - 2 * MARGIN)

    def y(self, v: float) -> float:
        frac = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return HEIGHT - MARGIN - frac * (HEIGHT - 2 * MARGIN)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _axes(frame: _Frame, spec: PlotSpec) -> list[str]:
    x0, y0 = MARGIN, HEIGHT - MARGIN
    x1, y1 = WIDTH - MARGIN, MARGIN
    parts = [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{x0}" y="{y0 + 18}" font-size="11">{_fmt(frame.x_lo)}</text>',
        f'<text x="{x1}" y="{y0 + 18}" font-size="11" text-anchor="end">{_fmt(frame.x_hi)}</text>',
        f'<text x="{x0 - 6}" y="{y0}" font-size="11" text-anchor="end">{_fmt(frame.y_lo)}</text>',
        f'<text x="{x0 - 6}" y="{y1 + 4}" font-size="11" text-anchor="end">{_fmt(frame.y_hi)}</text>',
    ]
    parts.extend(_labels(spec))
    return parts


def _labels(spec: PlotSpec) -> list[str]:
    parts = []
    if spec.title:
        parts.append(
            f'<text x="{WIDTH / 2}" y="24" font-size="14" text-anchor="middle">'
            f"{escape(spec.title)}</text>"
        )
    if spec.x_label:
        parts.append(
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 16}" font-size="12" '
            f'text-anchor="middle">{escape(spec.x_label)}</text>'
        )
    if spec.y_label:
        parts.append(
            f'<text x="16" y="{HEIGHT / 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 16 {HEIGHT / 2})">{escape(spec.y_label)}</text>'
        )
    return parts


def _document(body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _render_scatter(spec: PlotSpec) -> str:
    xs, ys = spec.series["x"], spec.series["y"]
    frame = _Frame(xs, ys)
    body = _axes(frame, spec)
    for x, y in zip(xs, ys):
        body.append(
            f'<circle class="marker" cx="{frame.x(x):.2f}" cy="{frame.y(y):.2f}" '
            f'r="3" fill="#1f77b4" fill-opacity="0.7"/>'
        )
    return _document(body)


def _polyline(points: list[tuple[float, float]], color: str, extra: str = "") -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return f'<polyline points="{coords}" fill="none" stroke="{color}"{extra}/>'


def _render_line(spec: PlotSpec) -> str:
    xs, ys = spec.series["x"], spec.series["y"]
    frame = _Frame(xs, ys)
    body = _axes(frame, spec)
    body.append(_polyline([(frame.x(x), frame.y(y)) for x, y in zip(xs, ys)], "#1f77b4"))
    return _document(body)


def _render_rolling(spec: PlotSpec) -> str:
    xs, ys = spec.series["x"], spec.series["y"]
    smoothed = rolling_mean(list(zip((int(x) for x in xs), ys)))
    frame = _Frame(xs, list(ys) + [v for _, v in smoothed])
    body = _axes(frame, spec)
    body.append(
        _polyline(
            [(frame.x(x), frame.y(y)) for x, y in zip(xs, ys)],
            "#aec7e8",
            ' stroke-dasharray="4 3"',
        )
    )
    body.append(
        _polyline([(frame.x(x), frame.y(v)) for x, (_, v) in zip(xs, smoothed)], "#1f77b4")
    )
    return _document(body)


def _render_band(spec: PlotSpec) -> str:
    xs = spec.series["x"]
    means = spec.series["mean"]
    stds = spec.series["std"]
    upper = [m + s for m, s in zip(means, stds)]
    lower = [m - s for m, s in zip(means, stds)]
    frame = _Frame(xs, list(upper) + list(lower))
    body = _axes(frame, spec)
    ring = [(frame.x(x), frame.y(u)) for x, u in zip(xs, upper)]
    ring += [(frame.x(x), frame.y(v)) for x, v in zip(reversed(xs), reversed(lower))]
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in ring)
    body.append(f'<polygon points="{coords}" fill="#1f77b4" fill-opacity="0.2"/>')
    body.append(_polyline([(frame.x(x), frame.y(m)) for x, m in zip(xs, means)], "#1f77b4"))
    return _document(body)


def _render_histogram(spec: PlotSpec, to_seconds: bool = False) -> str:
    values = spec.series["values"]
    if to_seconds:
        values = tuple(v / NS_PER_SECOND for v in values)
    bins = histogram(values)
    top = max(count for _, _, count in bins)
    frame = _Frame([bins[0][0], bins[-1][1]], [0, top])
    body = _axes(frame, spec)
    for lo, hi, count in bins:
        x = frame.x(lo)
        w = frame.x(hi) - x
        y = frame.y(count)
        h = frame.y(0) - y
        body.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
            f'fill="#1f77b4" stroke="white"/>'
        )
    return _document(body)


def _render_box(spec: PlotSpec) -> str:
    groups = {name: values for name, values in spec.series.items() if values}
    if not groups:
        raise EmptySeries("box plot has no groups")
    all_values = [v for values in groups.values() for v in values]
    frame = _Frame([0, len(groups)], all_values)
    body = _axes(frame, spec)
    slot = (WIDTH - 2 * MARGIN) / len(groups)
    half = slot * 0.3
    for i, (name, values) in enumerate(groups.items()):
        stats = tukey_box_stats(values)
        cx = MARGIN + slot * (i + 0.5)
        y_q1, y_q3 = frame.y(stats["q1"]), frame.y(stats["q3"])
        y_med = frame.y(stats["median"])
        y_lo, y_hi = frame.y(stats["whisker_lo"]), frame.y(stats["whisker_hi"])
        body += [
            f'<line x1="{cx:.2f}" y1="{y_lo:.2f}" x2="{cx:.2f}" y2="{y_q1:.2f}" stroke="black"/>',
            f'<line x1="{cx:.2f}" y1="{y_q3:.2f}" x2="{cx:.2f}" y2="{y_hi:.2f}" stroke="black"/>',
            f'<line x1="{cx - half:.2f}" y1="{y_lo:.2f}" x2="{cx + half:.2f}" y2="{y_lo:.2f}" stroke="black"/>',
            f'<line x1="{cx - half:.2f}" y1="{y_hi:.2f}" x2="{cx + half:.2f}" y2="{y_hi:.2f}" stroke="black"/>',
            f'<rect class="box" x="{cx - half:.2f}" y="{y_q3:.2f}" width="{2 * half:.2f}" '
            f'height="{y_q1 - y_q3:.2f}" fill="#1f77b4" fill-opacity="0.4" stroke="black"/>',
            f'<line class="median" x1="{cx - half:.2f}" y1="{y_med:.2f}" '
            f'x2="{cx + half:.2f}" y2="{y_med:.2f}" stroke="black" stroke-width="2"/>',
            f'<text x="{cx:.2f}" y="{HEIGHT - MARGIN + 18}" font-size="11" '
            f'text-anchor="middle">{escape(str(name))}</text>',
        ]
        for v in stats["outliers"]:
            body.append(
                f'<circle class="outlier" cx="{cx:.2f}" cy="{frame.y(v):.2f}" r="3" '
                f'fill="none" stroke="black"/>'
            )
    return _document(body)


def _heat_color(r: float | None) -> str:
    if r is None:
        return "#cccccc"
    # blue (-1) through white (0) to red (+1)
    if r >= 0:
        g = int(round(255 * (1 - r)))
        return f"#ff{g:02x}{g:02x}"
    g = int(round(255 * (1 + r)))
    return f"#{g:02x}{g:02x}ff"


def _render_heatmap(spec: PlotSpec) -> str:
    names, matrix = pearson_matrix({k: list(v) for k, v in spec.series.items()})
    n = len(names)
    side = min(WIDTH, HEIGHT) - 2 * MARGIN
    cell = side / n
    body = _labels(spec)
    for i, row_name in enumerate(names):
        y = MARGIN + i * cell
        body.append(
            f'<text x="{MARGIN - 6}" y="{y + cell / 2 + 4:.2f}" font-size="11" '
            f'text-anchor="end">{escape(row_name)}</text>'
        )
        for j in range(n):
            x = MARGIN + j * cell
            r = matrix[i][j]
            label = "n/a" if r is None else f"{r:.2f}"
            body.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{cell:.2f}" height="{cell:.2f}" '
                f'fill="{_heat_color(r)}" stroke="white"/>'
            )
            body.append(
                f'<text x="{x + cell / 2:.2f}" y="{y + cell / 2 + 4:.2f}" font-size="11" '
                f'text-anchor="middle">{label}</text>'
            )
    for j, col_name in enumerate(names):
        x = MARGIN + j * cell
        body.append(
            f'<text x="{x + cell / 2:.2f}" y="{MARGIN - 8}" font-size="11" '
            f'text-anchor="middle">{escape(col_name)}</text>'
        )
    return _document(body)


def render_svg(spec: PlotSpec) -> str:
    """Render a PlotSpec into one standalone SVG document string."""
    _check(spec)
    if spec.kind in SCATTER_KINDS:
        return _render_scatter(spec)
    if spec.kind == "line_acc_time":
        return _render_line(spec)
    if spec.kind == "rolling_mean":
        return _render_rolling(spec)
    if spec.kind == "mean_std_band":
        return _render_band(spec)
    if spec.kind == "histogram_acc":
        return _render_histogram(spec)
    if spec.kind == "duration_distribution":
        return _render_histogram(spec, to_seconds=True)
    if spec.kind == "box_acc_epoch":
        return _render_box(spec)
    return _render_heatmap(spec)


def plotspec_from_rows(kind: str, rows) -> PlotSpec:
    """Bind query rows to the vectors a plot kind expects."""
    if not rows:
        raise EmptySeries("no rows to plot")
    epochs = [float(r.epoch) for r in rows]
    accs = [r.accuracy for r in rows]
    durations = [float(r.duration) for r in rows]
    if kind == "scatter_acc_epoch":
        return PlotSpec(kind, {"x": epochs, "y": accs}, x_label="epoch", y_label="accuracy")
    if kind == "scatter_acc_duration":
        secs = [d / NS_PER_SECOND for d in durations]
        return PlotSpec(kind, {"x": secs, "y": accs}, x_label="duration (s)", y_label="accuracy")
    if kind == "line_acc_time":
        order = sorted(range(len(rows)), key=lambda i: (epochs[i], i))
        elapsed = []
        total = 0.0
        for i in order:
            total += durations[i] / NS_PER_SECOND
            elapsed.append(total)
        return PlotSpec(
            kind,
            {"x": elapsed, "y": [accs[i] for i in order]},
            x_label="cumulative duration (s)",
            y_label="accuracy",
        )
    if kind == "box_acc_epoch":
        groups: dict[str, list[float]] = {}
        for r in sorted(rows, key=lambda r: r.epoch):
            groups.setdefault(str(r.epoch), []).append(r.accuracy)
        return PlotSpec(kind, groups, x_label="epoch", y_label="accuracy")
    if kind == "histogram_acc":
        return PlotSpec(kind, {"values": accs}, x_label="accuracy", y_label="count")
    if kind in ("rolling_mean", "mean_std_band"):
        per_epoch: dict[int, list[float]] = {}
        for r in rows:
            per_epoch.setdefault(r.epoch, []).append(r.accuracy)
        xs = sorted(per_epoch)
        means = [math.fsum(per_epoch[e]) / len(per_epoch[e]) for e in xs]
        if kind == "rolling_mean":
            return PlotSpec(
                kind,
                {"x": [float(e) for e in xs], "y": means},
                x_label="epoch",
                y_label="accuracy",
            )
        stds = []
        for e, m in zip(xs, means):
            vals = per_epoch[e]
            if len(vals) == 1:
                stds.append(0.0)
            else:
                var = math.fsum((v - m) ** 2 for v in vals) / (len(vals) - 1)
                stds.append(math.sqrt(var))
        return PlotSpec(
            kind,
            {"x": [float(e) for e in xs], "mean": means, "std": stds},
            x_label="epoch",
            y_label="accuracy",
        )
    if kind == "corr_heatmap":
        return PlotSpec(
            kind,
            {"epoch": epochs, "accuracy": accs, "duration": durations},
            title="correlations",
        )
    if kind == "duration_distribution":
        return PlotSpec(kind, {"values": durations}, x_label="duration (s)", y_label="count")
    raise ValueError(f"unknown plot kind {kind!r}")
