"""Render experiment trace CSVs into log-scale residual figures.

Input is the trace format written by the experiment harness: any number of
``#``-prefixed metadata lines, then a ``k,<series...>`` header, then one
numeric row per iteration (``nan`` marks a diverged tail). This package
reads only that documented format -- it has no other coupling to the
code that produced the file.
"""

from dataclasses import dataclass

import numpy as np
from matplotlib.figure import Figure

__all__ = ["PlotSpec", "read_series", "render", "CLIP_FLOOR"]

# residuals of exactly zero cannot sit on a log axis; clip them here
CLIP_FLOOR = 1e-16


@dataclass(frozen=True)
class PlotSpec:
    """What to plot: input traces, output path, and figure dressing.

    labels override the per-series legend entries positionally across all
    inputs (default: the CSV column names). svg additionally writes a
    sibling .svg next to the PNG. The y axis is always log base 10.
    """

    inputs: tuple
    out: str
    title: str | None = None
    labels: tuple | None = None
    svg: bool = False

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


def read_series(path):
    """Parse one trace CSV into (k, {name: values}).

    Skips '#' metadata and blank lines; the first remaining line must be a
    'k,...' header with at least one series column. Malformed rows raise
    ValueError tagged path:line. nan entries are kept (divergence padding).
    """
    header = None
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                if cells[0] != "k" or len(cells) < 2:
                    raise ValueError(f"{path}:{lineno}: expected a 'k,<series...>' header")
                header = cells
                continue
            if len(cells) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(cells)}")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from None
    if header is None:
        raise ValueError(f"{path}: no header line found")

    data = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    k = data[:, 0]
    return k, {name: data[:, j] for j, name in enumerate(header) if j > 0}


def _clean(values, label, path):
    """Apply the log-axis clip rule and reject unusable series."""
    v = np.asarray(values, dtype=float)
    finite = v[np.isfinite(v)]
    if finite.size == 0:
        raise ValueError(f"{path}: series {label!r} is empty")
    if np.any(finite < 0):
        raise ValueError(f"{path}: series {label!r} has negative values")
    out = v.copy()
    out[np.isfinite(v) & (v < CLIP_FLOOR)] = CLIP_FLOOR
    return out


def render(spec: PlotSpec) -> Figure:
    """Plot every series of every input on one log-y figure.

    Writes a PNG to spec.out (plus a sibling .svg when spec.svg) and
    returns the Figure so callers can inspect axes, lines, and legend.
    Inputs are only ever opened for reading.
    """
    series = []  # (label, k, values)
    for path in spec.inputs:
        k, cols = read_series(path)
        for name, values in cols.items():
            series.append((name, k, _clean(values, name, path)))

    if spec.labels is not None:
        if len(spec.labels) != len(series):
            raise ValueError(
                f"{len(spec.labels)} labels for {len(series)} series")
        series = [(lab, k, v) for lab, (_, k, v) in zip(spec.labels, series)]

    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.add_subplot()
    for label, k, values in series:
        ax.plot(k, values, label=label, linewidth=1.4)
    ax.set_yscale("log", base=10)
    ax.set_xlabel("iteration k")
    ax.set_ylabel("residual")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if spec.title:
        ax.set_title(spec.title)

    fig.savefig(spec.out, format="png", dpi=150, bbox_inches="tight")
    if spec.svg:
        svg_path = str(spec.out).rsplit(".", 1)[0] + ".svg"
        fig.savefig(svg_path, format="svg", bbox_inches="tight")
    return fig
