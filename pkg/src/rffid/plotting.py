"""Deterministic SVG rendering of results CSV files.

The renderer is self-contained (no plotting dependency) so identical CSV
input always produces identical SVG bytes.  One polyline is drawn per value
of the series column; the y value of each point is the mean over all rows
sharing (x, series), and the legend reports the per-point row counts.
"""

from __future__ import annotations

import csv

WIDTH, HEIGHT = 820, 520
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 190, 40, 60

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2",
)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def plot_results(results_csv, x: str, y: str, series: str, out_path) -> None:
    """Render mean-over-trials curves from a results CSV into an SVG file.

    x and y must parse as numbers; series may be any column.  Errors are
    raised (and no file written) for unknown columns or an empty CSV.
    """
    with open(results_csv, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{results_csv} is empty: no header row")
        for col in (x, y, series):
            if col not in reader.fieldnames:
                raise ValueError(
                    f"unknown column {col!r}; available columns: {', '.join(reader.fieldnames)}"
                )
        rows = list(reader)
    if not rows:
        raise ValueError(f"{results_csv} contains a header but no data rows")

    grouped: dict = {}
    for row in rows:
        key = row[series]
        xv = float(row[x])
        yv = float(row[y])
        grouped.setdefault(key, {}).setdefault(xv, []).append(yv)

    series_keys = sorted(grouped)
    all_x = sorted({xv for pts in grouped.values() for xv in pts})
    all_means = [
        sum(vals) / len(vals) for pts in grouped.values() for vals in pts.values()
    ]
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_means), max(all_means)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5

    inner_w = WIDTH - MARGIN_L - MARGIN_R
    inner_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(v):
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * inner_w

    def py(v):
        return MARGIN_T + (y_hi - v) / (y_hi - y_lo) * inner_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{inner_w}" height="{inner_h}" '
        'fill="none" stroke="#333333" stroke-width="1"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{_fmt(px(tx))}" y1="{MARGIN_T + inner_h}" x2="{_fmt(px(tx))}" '
            f'y2="{MARGIN_T + inner_h + 5}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{_fmt(px(tx))}" y="{MARGIN_T + inner_h + 20}" font-size="12" '
            f'text-anchor="middle" font-family="sans-serif">{tx:g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{_fmt(py(ty))}" x2="{MARGIN_L}" '
            f'y2="{_fmt(py(ty))}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 10}" y="{_fmt(py(ty) + 4)}" font-size="12" '
            f'text-anchor="end" font-family="sans-serif">{ty:.3g}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_L + inner_w / 2:.0f}" y="{HEIGHT - 15}" font-size="14" '
        f'text-anchor="middle" font-family="sans-serif">{x}</text>'
    )
    parts.append(
        f'<text x="18" y="{MARGIN_T + inner_h / 2:.0f}" font-size="14" text-anchor="middle" '
        f'font-family="sans-serif" transform="rotate(-90 18 {MARGIN_T + inner_h / 2:.0f})">{y}</text>'
    )

    legend_x = WIDTH - MARGIN_R + 15
    for idx, key in enumerate(series_keys):
        color = PALETTE[idx % len(PALETTE)]
        pts = grouped[key]
        xs = sorted(pts)
        means = [sum(pts[xv]) / len(pts[xv]) for xv in xs]
        counts = [len(pts[xv]) for xv in xs]
        coords = " ".join(f"{_fmt(px(xv))},{_fmt(py(m))}" for xv, m in zip(xs, means))
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        for xv, m in zip(xs, means):
            parts.append(
                f'<circle cx="{_fmt(px(xv))}" cy="{_fmt(py(m))}" r="3" fill="{color}"/>'
            )
        if len(set(counts)) == 1:
            count_txt = f"n={counts[0]}"
        else:
            count_txt = "n=" + "/".join(str(c) for c in counts)
        ly = MARGIN_T + 18 * (idx + 1)
        parts.append(
            f'<line x1="{legend_x}" y1="{ly - 4}" x2="{legend_x + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{legend_x + 28}" y="{ly}" font-size="12" '
            f'font-family="sans-serif">{series}={key} ({count_txt})</text>'
        )
    parts.append("</svg>")

    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
