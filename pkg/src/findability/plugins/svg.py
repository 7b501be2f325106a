"""Lorenz curves as a self-contained SVG, equality diagonal included."""
from typing import Dict, List, Sequence, Tuple
from xml.sax.saxutils import escape

from findability.plugins import BaseController

SIZE = 360
MARGIN = 48
COLORS = ("#1f77b4", "#2ca02c", "#ff7f0e", "#d62728", "#9467bd", "#8c564b")


def _xy(point: Tuple[float, float]) -> str:
    x = MARGIN + point[0] * SIZE
    y = MARGIN + (1.0 - point[1]) * SIZE
    return f"{x:.2f},{y:.2f}"


class Controller(BaseController):

    extension = "svg"

    @staticmethod
    def export(data: Dict[str, Sequence[Tuple[float, float]]]) -> bytes:
        """``data`` maps a curve label to its Lorenz points."""
        width = SIZE + 2 * MARGIN + 160
        height = SIZE + 2 * MARGIN
        low, high = MARGIN, MARGIN + SIZE
        parts: List[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
            f'<rect x="{low}" y="{low}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#000"/>',
            f'<line x1="{low}" y1="{high}" x2="{high}" y2="{low}" stroke="#888" stroke-dasharray="4 4"/>',
            f'<text x="{low + SIZE / 2:.0f}" y="{height - 12}" text-anchor="middle">cumulative share of documents</text>',
            f'<text x="14" y="{low + SIZE / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {low + SIZE / 2:.0f})">cumulative share of score</text>',
        ]
        for tick in (0.0, 0.5, 1.0):
            x, y = _xy((tick, tick)).split(",")
            parts.append(f'<text x="{x}" y="{high + 16}" text-anchor="middle">{tick:g}</text>')
            parts.append(f'<text x="{low - 6}" y="{y}" text-anchor="end">{tick:g}</text>')

        for number, (label, points) in enumerate(data.items()):
            color = COLORS[number % len(COLORS)]
            coordinates = " ".join(_xy(point) for point in points)
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coordinates}"/>')
            legend_y = low + 16 * number + 8
            parts.append(
                f'<line x1="{high + 16}" y1="{legend_y}" x2="{high + 36}" y2="{legend_y}" stroke="{color}" stroke-width="2"/>'
            )
            parts.append(f'<text x="{high + 42}" y="{legend_y + 4}">{escape(label)}</text>')
        parts.append("</svg>")
        return ("\n".join(parts) + "\n").encode("utf-8")
