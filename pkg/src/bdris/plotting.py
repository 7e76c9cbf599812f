"""Deterministic SVG emission of summary curves: SE versus element count.

One curve per (framework, power budget), confidence whiskers per point,
legend in lexicographic (framework, power) order.  The writer formats all
coordinates itself, so identical summaries produce identical bytes.
"""

from __future__ import annotations

from .experiment import SummaryRow

_COLORS = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#e377c2",
)

_WIDTH, _HEIGHT = 720.0, 480.0
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70.0, 20.0, 30.0, 50.0


class PlotError(ValueError):
    """Summary cannot be plotted (for example a single element count)."""


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def emit_plot(summary: list[SummaryRow], out_path) -> None:
    """Write the SE-versus-elements figure for a sweep summary.

    Raises `PlotError` when the summary covers fewer than two element
    counts, since a one-point sweep has nothing to draw.
    """
    ks = sorted({row.num_elements for row in summary})
    if len(ks) < 2:
        raise PlotError(
            "summary has a single element count; use the `run` command for "
            "single-point experiments and `sweep` to produce plottable data"
        )

    series: dict[tuple[str, float], list[SummaryRow]] = {}
    for row in summary:
        series.setdefault((row.framework, row.pt_dbm), []).append(row)
    keys = sorted(series)

    top = 0.0
    for row in summary:
        top = max(top, row.mean_se, row.ci_hi if row.ci_hi == row.ci_hi else row.mean_se)
    top = top * 1.05 if top > 0 else 1.0

    x_lo, x_hi = min(ks), max(ks)
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(k: float) -> float:
        return _MARGIN_L + plot_w * (k - x_lo) / (x_hi - x_lo)

    def sy(v: float) -> float:
        return _MARGIN_T + plot_h * (1.0 - v / top)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_WIDTH)}" '
        f'height="{_fmt(_HEIGHT)}" viewBox="0 0 {_fmt(_WIDTH)} {_fmt(_HEIGHT)}">',
        f'<rect width="{_fmt(_WIDTH)}" height="{_fmt(_HEIGHT)}" fill="white"/>',
    ]

    axis_style = 'stroke="black" stroke-width="1"'
    x0, y0 = _MARGIN_L, _HEIGHT - _MARGIN_B
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(_WIDTH - _MARGIN_R)}" y2="{_fmt(y0)}" {axis_style}/>')
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(_MARGIN_T)}" x2="{_fmt(x0)}" y2="{_fmt(y0)}" {axis_style}/>')

    for k in ks:
        x = sx(k)
        parts.append(f'<line x1="{_fmt(x)}" y1="{_fmt(y0)}" x2="{_fmt(x)}" y2="{_fmt(y0 + 5)}" {axis_style}/>')
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y0 + 20)}" font-size="12" text-anchor="middle">{k}</text>'
        )
    for i in range(6):
        value = top * i / 5.0
        y = sy(value)
        parts.append(f'<line x1="{_fmt(x0 - 5)}" y1="{_fmt(y)}" x2="{_fmt(x0)}" y2="{_fmt(y)}" {axis_style}/>')
        parts.append(
            f'<text x="{_fmt(x0 - 8)}" y="{_fmt(y + 4)}" font-size="12" text-anchor="end">{value:.3g}</text>'
        )
    parts.append(
        f'<text x="{_fmt(_MARGIN_L + plot_w / 2)}" y="{_fmt(_HEIGHT - 12)}" font-size="13" '
        'text-anchor="middle">number of phase response elements</text>'
    )
    parts.append(
        f'<text x="16" y="{_fmt(_MARGIN_T + plot_h / 2)}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {_fmt(_MARGIN_T + plot_h / 2)})">sum spectral efficiency '
        "[b/s/Hz]</text>"
    )

    for idx, key in enumerate(keys):
        color = _COLORS[idx % len(_COLORS)]
        rows = sorted(series[key], key=lambda r: r.num_elements)
        points = " ".join(f"{_fmt(sx(r.num_elements))},{_fmt(sy(r.mean_se))}" for r in rows)
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>')
        for row in rows:
            x = sx(row.num_elements)
            parts.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(sy(row.mean_se))}" r="3" fill="{color}"/>'
            )
            if row.ci_lo == row.ci_lo:  # skip undefined (NaN) intervals
                y_lo, y_hi = sy(row.ci_lo), sy(row.ci_hi)
                whisker = f'stroke="{color}" stroke-width="1"'
                parts.append(f'<line x1="{_fmt(x)}" y1="{_fmt(y_lo)}" x2="{_fmt(x)}" y2="{_fmt(y_hi)}" {whisker}/>')
                for y in (y_lo, y_hi):
                    parts.append(
                        f'<line x1="{_fmt(x - 3)}" y1="{_fmt(y)}" x2="{_fmt(x + 3)}" y2="{_fmt(y)}" {whisker}/>'
                    )

    legend_x = _MARGIN_L + 12.0
    legend_y = _MARGIN_T + 8.0
    for idx, (framework, pt_dbm) in enumerate(keys):
        color = _COLORS[idx % len(_COLORS)]
        y = legend_y + 16.0 * idx
        parts.append(f'<rect x="{_fmt(legend_x)}" y="{_fmt(y)}" width="14" height="4" fill="{color}"/>')
        parts.append(
            f'<text x="{_fmt(legend_x + 20)}" y="{_fmt(y + 6)}" font-size="12">'
            f"{framework} @ {pt_dbm:g} dBm</text>"
        )

    parts.append("</svg>")
    with open(out_path, "w", newline="\n") as handle:
        handle.write("\n".join(parts) + "\n")
