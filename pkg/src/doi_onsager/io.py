"""Deterministic CSV, JSON and SVG writers.

Floats are printed with 17 significant digits, lines end in LF and JSON keys
are sorted, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return format(x, ".17g")
    return str(x)


def _json(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}{_json(str(k), indent, level + 1)}: {_json(obj[k], indent, level + 1)}' for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json(v, indent, level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj) -> str:
    return _json(obj, 2, 0) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_bytes(dumps_json(obj).encode())
    return path


def csv_text(header: list[str], rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    path.write_bytes(csv_text(header, rows).encode())
    return path


def svg_text(series: dict, title: str = "", xlabel: str = "", ylabel: str = "", loglog: bool = False) -> str:
    """Minimal line chart: one polyline per ``{label: (x, y)}`` entry."""
    W, H, M = 480, 360, 56
    tx = (lambda v: math.log10(v)) if loglog else float
    pts = {k: [(tx(x), tx(y)) for x, y in zip(*v) if not loglog or (x > 0 and y > 0)] for k, v in series.items()}
    allx = [p[0] for v in pts.values() for p in v] or [0.0, 1.0]
    ally = [p[1] for v in pts.values() for p in v] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    sx = lambda x: M + (x - x0) / (x1 - x0) * (W - 2 * M)
    sy = lambda y: H - M - (y - y0) / (y1 - y0) * (H - 2 * M)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="{M}" y="{M}" width="{W - 2 * M}" height="{H - 2 * M}" fill="none" stroke="#000"/>',
        f'<text x="{W / 2}" y="{M / 2}" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="14" y="{H / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {H / 2})">{escape(ylabel)}</text>',
        f'<text x="{M}" y="{H - M + 16}" font-size="10">{fmt(x0)[:8]}</text>',
        f'<text x="{W - M}" y="{H - M + 16}" text-anchor="end" font-size="10">{fmt(x1)[:8]}</text>',
        f'<text x="{M - 4}" y="{H - M}" text-anchor="end" font-size="10">{fmt(y0)[:8]}</text>',
        f'<text x="{M - 4}" y="{M + 10}" text-anchor="end" font-size="10">{fmt(y1)[:8]}</text>',
    ]
    for i, (label, p) in enumerate(pts.items()):
        c = colors[i % len(colors)]
        coords = " ".join(f"{sx(x):.3f},{sy(y):.3f}" for x, y in p)
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{W - M + 4}" y="{M + 14 * (i + 1)}" font-size="10" fill="{c}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: Path, series: dict, **kw) -> Path:
    path = Path(path)
    path.write_bytes(svg_text(series, **kw).encode())
    return path


def emit(results, fmt_name: str, path: Path, **kw) -> Path:
    """Dispatch to the writer for ``fmt_name`` in {csv, json, svg}.

    ``results`` is ``(header, rows)`` for CSV, a JSON-able object for JSON and a
    ``{label: (x, y)}`` mapping for SVG.
    """
    if fmt_name == "csv":
        header, rows = results
        return write_csv(path, header, rows)
    if fmt_name == "json":
        return write_json(path, results)
    if fmt_name == "svg":
        return write_svg(path, results, **kw)
    raise ValueError(f"unknown output format {fmt_name!r}")
