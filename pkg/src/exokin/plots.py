"""CSV export of sphere coverage maps and a small self-contained SVG writer."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .spherical import CoverageMap

CSV_HEADER = ("bin", "lat_deg", "lon_deg", "covered")


def coverage_csv(cmap: CoverageMap) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i, ((lat, lon), hit) in enumerate(zip(cmap.grid.centers(), cmap.covered)):
        writer.writerow((i, f"{lat:.6f}", f"{lon:.6f}", int(bool(hit))))
    return buf.getvalue()


def read_coverage_csv(text: str) -> list[tuple[int, float, float, bool]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("not a coverage CSV")
    return [(int(b), float(lat), float(lon), c == "1") for b, lat, lon, c in rows[1:]]


def coverage_svg(rows: list[tuple[int, float, float, bool]], bounds, title: str = "",
                 width: int = 720, height: int = 360) -> str:
    """Equirectangular heatmap; one rectangle per equal-area cell.

    ``rows`` come from :func:`read_coverage_csv` so the plot is drawn from
    the CSV contents; ``bounds`` are the grid's cell bounds.
    """
    sx, sy = width / 360.0, height / 180.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + 24}" '
             f'viewBox="0 0 {width} {height + 24}">']
    if title:
        parts.append(f'<text x="4" y="16" font-family="sans-serif" font-size="14">{title}</text>')
    parts.append('<g transform="translate(0,24)">')
    for (b, _, _, hit), (lat_lo, lat_hi, lon_lo, lon_hi) in zip(rows, bounds):
        x, w = lon_lo * sx, (lon_hi - lon_lo) * sx
        y, h = (90.0 - lat_hi) * sy, (lat_hi - lat_lo) * sy
        fill = "#2b8cbe" if hit else "#f03b20"
        parts.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" height="{h:.3f}" '
                     f'fill="{fill}" stroke="#ffffff" stroke-width="0.3"><title>bin {b}</title></rect>')
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"


def write_coverage(cmap: CoverageMap, stem: Path, title: str = "") -> tuple[Path, Path]:
    csv_text = coverage_csv(cmap)
    csv_path = stem.with_suffix(".csv")
    svg_path = stem.with_suffix(".svg")
    csv_path.write_text(csv_text, encoding="utf-8")
    svg_path.write_text(coverage_svg(read_coverage_csv(csv_text), cmap.grid.cell_bounds(), title),
                        encoding="utf-8")
    return csv_path, svg_path
