"""CSV tables and standalone SVG figures for experiment results."""

from __future__ import annotations

import csv
from xml.sax.saxutils import escape

import numpy as np

from .experiments import COLUMNS, ExperimentResult, cell_means

__all__ = ["emit_csv", "read_csv", "format_value", "emit_figure", "render_svg"]

_INT_COLUMNS = ("p", "s", "T", "m", "rep", "seed", "fit_sweeps")
_STR_COLUMNS = ("study",)

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def format_value(value) -> str:
    """Integers verbatim, floats with 12 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % float(value)
    return str(value)


def emit_csv(result: ExperimentResult, path) -> None:
    """Write ``result`` as UTF-8 CSV with LF line endings and the fixed header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in result.rows:
            w.writerow([format_value(row[c]) for c in COLUMNS])


def read_csv(path) -> ExperimentResult:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for rec in reader:
            row = {}
            for name, text in zip(COLUMNS, rec):
                if name in _STR_COLUMNS:
                    row[name] = text
                elif name in _INT_COLUMNS:
                    row[name] = int(text)
                else:
                    row[name] = float(text)
            rows.append(row)
    return ExperimentResult(rows=rows)


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _label(x):
    return "%.3g" % x


_X_LABELS = {
    "rescaled_sqrt": "sqrt(s log p / T)",
    "T_over_slogp": "T / (s log p)",
}


def render_svg(result: ExperimentResult, x_axis: str = "rescaled_sqrt", group_by: str = "shape_or_rho",
               metric: str = "frob_error", title: str | None = None) -> str:
    """Return the SVG document as text; see ``emit_figure``."""
    if not result.rows:
        raise ValueError("cannot plot an empty result")
    if x_axis not in _X_LABELS:
        raise ValueError(f"unknown x axis {x_axis!r}")
    curves = cell_means(result, x_axis=x_axis, group_by=group_by, metric=metric)
    panels = sorted({k[0] for k in curves})
    groups = sorted({k[1] for k in curves})
    panel_name = "shape_or_rho" if group_by == "p" else "p"

    pw, ph = 360, 260
    ml, mr, mt, mb = 60, 20, 40, 50
    legend_w = 130
    width = len(panels) * (pw + ml + mr) + legend_w
    height = ph + mt + mb

    xs = np.concatenate([c[0] for c in curves.values()])
    ys = np.concatenate([c[1] for c in curves.values()])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = min(0.0, float(ys.min())), float(ys.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5 * max(abs(x_lo), 1.0), x_hi + 0.5 * max(abs(x_hi), 1.0)
    if y_hi == y_lo:
        y_hi = y_lo + max(abs(y_lo), 1.0)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>')

    colour = {g: _PALETTE[i % len(_PALETTE)] for i, g in enumerate(groups)}
    for k, panel in enumerate(panels):
        ox = k * (pw + ml + mr) + ml

        def sx(x):
            return ox + (x - x_lo) / (x_hi - x_lo) * pw

        def sy(y):
            return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph

        out.append(f'<rect x="{ox}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        if len(panels) > 1 or panel_name == "p":
            out.append(f'<text x="{ox + pw / 2:.1f}" y="{mt - 6}" text-anchor="middle">'
                       f'{panel_name} = {escape(format_value(panel))}</text>')
        for t in _ticks(x_lo, x_hi):
            out.append(f'<line x1="{sx(t):.1f}" y1="{mt + ph}" x2="{sx(t):.1f}" y2="{mt + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{sx(t):.1f}" y="{mt + ph + 16}" text-anchor="middle">{_label(t)}</text>')
        for t in _ticks(y_lo, y_hi):
            out.append(f'<line x1="{ox - 4}" y1="{sy(t):.1f}" x2="{ox}" y2="{sy(t):.1f}" stroke="black"/>')
            out.append(f'<text x="{ox - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{_label(t)}</text>')
        out.append(f'<text x="{ox + pw / 2:.1f}" y="{mt + ph + 36}" text-anchor="middle">{_X_LABELS[x_axis]}</text>')
        out.append(f'<text x="{ox - 44}" y="{mt + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 {ox - 44} {mt + ph / 2:.1f})">mean {escape(metric)}</text>')
        for g in groups:
            if (panel, g) not in curves:
                continue
            x, y, _se = curves[(panel, g)]
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
            if len(x) > 1:
                out.append(f'<polyline points="{pts}" fill="none" stroke="{colour[g]}" stroke-width="1.5"/>')
            for a, b in zip(x, y):
                out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="{colour[g]}"/>')

    lx = len(panels) * (pw + ml + mr) + 10
    for i, g in enumerate(groups):
        y = mt + 14 + 18 * i
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 20}" y2="{y}" stroke="{colour[g]}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{y + 4}">{group_by} = {escape(format_value(g))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_figure(result: ExperimentResult, x_axis: str, group_by: str, path, metric: str = "frob_error",
                title: str | None = None) -> None:
    """Write a standalone SVG of mean ``metric`` per cell.

    One polyline per ``group_by`` value, one panel per value of the other grid
    coordinate, a marker at every cell mean, legend and axis labels. No
    external assets.
    """
    text = render_svg(result, x_axis=x_axis, group_by=group_by, metric=metric, title=title)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)

