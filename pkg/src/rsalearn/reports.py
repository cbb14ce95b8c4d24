"""Report serialization: CSV rows, a JSON summary and an SVG line chart.

Output is byte-stable for identical inputs: floats are written with
``repr``, dict keys are sorted and nothing time-dependent is recorded.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

from .experiments import Report


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_fmt(row.get(col, "")) for col in report.columns])
    return buf.getvalue()


def to_json(report: Report) -> str:
    doc = {"report": report.name, "version": 1, "rows": report.rows, "summary": report.summary}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def line_chart_svg(x: Sequence[float], series: dict[str, Sequence[float]], title: str = "",
                   x_label: str = "step", y_label: str = "accuracy", width: int = 480,
                   height: int = 320) -> str:
    """Minimal dependency-free SVG line chart with a y range of [0, 1]."""
    left, right, top, bottom = 50, 110, 30, 40
    pw, ph = width - left - right, height - top - bottom
    x0, x1 = min(x), max(x)
    span = (x1 - x0) or 1

    def px(v):
        return left + pw * (v - x0) / span

    def py(v):
        return top + ph * (1 - v)

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<text x="{left - 6}" y="{py(tick) + 4:.1f}" text-anchor="end" font-size="10">'
                     f'{tick:.2f}</text>')
    for tick in (x0, (x0 + x1) / 2, x1):
        parts.append(f'<text x="{px(tick):.1f}" y="{top + ph + 14}" text-anchor="middle" font-size="10">'
                     f'{tick:g}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 6}" text-anchor="middle" font-size="11">'
                 f'{x_label}</text>')
    parts.append(f'<text x="12" y="{top + ph / 2:.1f}" font-size="11" '
                 f'transform="rotate(-90 12 {top + ph / 2:.1f})" text-anchor="middle">{y_label}</text>')
    for k, (name, ys) in enumerate(series.items()):
        colour = palette[k % len(palette)]
        points = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, ys))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{points}"/>')
        ly = top + 14 + 16 * k
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                     f'stroke="{colour}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 34}" y="{ly + 4}" font-size="11">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def fig4_svg(report: Report) -> str:
    steps = [row["step"] for row in report.rows]
    series = {col.replace("_accuracy", ""): [row[col] for row in report.rows]
              for col in report.columns if col.endswith("_accuracy")}
    return line_chart_svg(steps, series, title="held-out accuracy by listener level")


def write_report(report: Report, out_dir: str | Path, svg: bool = False) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{report.name}.csv", out / f"{report.name}.json"]
    paths[0].write_text(to_csv(report))
    paths[1].write_text(to_json(report))
    if svg:
        paths.append(out / f"{report.name}.svg")
        paths[2].write_text(fig4_svg(report))
    return paths
