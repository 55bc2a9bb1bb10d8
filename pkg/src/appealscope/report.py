"""Grouped bar chart of log-transformed group means, as plain SVG."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .influence import GROUPS, OVERALL, GroupSummary

COLORS = {
    "BotMisinfo": "#2e8b57",
    "HumanMisinfo": "#1f5fa8",
    "BotInfo": "#8fd19e",
    "HumanInfo": "#8db8e8",
}


def _fmt(x: float) -> str:
    return "n/a" if math.isnan(x) else f"{x:.2f}"


def summary_svg(summary: GroupSummary, scope: str = OVERALL) -> str:
    """Bars are ``ln(1 + mean)``; the untransformed mean is printed above each bar."""
    rows = {r.group: r for r in summary.rows if r.scope == scope}
    panels = [("Appeal", "mean_appeal", "log_mean_appeal"), ("Scope", "mean_scope", "log_mean_scope")]
    width, height = 720, 360
    top, bottom, left = 50, 300, 40
    panel_w = (width - 2 * left) / len(panels)
    bar_w = panel_w / (len(GROUPS) + 2)
    heights = [getattr(rows[g], lg) for _, _, lg in panels for g in GROUPS]
    finite = [h for h in heights if not math.isnan(h)]
    ymax = max(finite) if finite and max(finite) > 0 else 1.0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">'
        f"Average Appeal and Scope (ln(1+mean), {escape(scope)})</text>",
        f'<line x1="{left}" y1="{bottom}" x2="{width - left}" y2="{bottom}" stroke="black"/>',
    ]
    for pi, (title, raw_attr, log_attr) in enumerate(panels):
        x0 = left + pi * panel_w
        out.append(
            f'<text x="{x0 + panel_w / 2:.1f}" y="{bottom + 40}" text-anchor="middle" font-size="13">{title}</text>'
        )
        for gi, g in enumerate(GROUPS):
            row = rows[g]
            h = getattr(row, log_attr)
            h = 0.0 if math.isnan(h) else h
            bar_h = (bottom - top) * h / ymax
            x = x0 + bar_w * (gi + 1)
            y = bottom - bar_h
            out.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w * 0.9:.1f}" height="{bar_h:.1f}" fill="{COLORS[g]}"/>'
            )
            out.append(
                f'<text x="{x + bar_w * 0.45:.1f}" y="{y - 4:.1f}" text-anchor="middle">'
                f"{_fmt(getattr(row, raw_attr))}</text>"
            )
            out.append(
                f'<text x="{x + bar_w * 0.45:.1f}" y="{bottom + 14}" text-anchor="middle" font-size="9">{g}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
