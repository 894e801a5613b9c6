"""
Test accuracy curves as standalone SVG files.

One polyline (plus circle markers) per model, sweep variable on the x-axis,
test accuracy in [0, 1] on the y-axis.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from hvnet.errors import DatasetError
from hvnet.helpers import sanitize_filename

from experiments.metrics import MetricRow, aggregate_repeats, read_metrics_csv

logger = logging.getLogger(__name__)

WIDTH, HEIGHT, PAD = 640, 400, 60
COLORS = {"hvn": "#1f77b4", "mlp": "#d62728", "fpca": "#2ca02c"}
FALLBACK_COLORS = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


@dataclass(frozen=True)
class PlotFrame:
    """Maps data coordinates (x, accuracy) to SVG pixels and back."""

    x_min: float
    x_max: float
    width: int = WIDTH
    height: int = HEIGHT
    pad: int = PAD

    def to_svg(self, x: float, y: float) -> Tuple[float, float]:
        px = self.pad + (x - self.x_min) / (self.x_max - self.x_min) * (self.width - 2 * self.pad)
        py = self.height - self.pad - y * (self.height - 2 * self.pad)
        return px, py

    def from_svg(self, px: float, py: float) -> Tuple[float, float]:
        x = self.x_min + (px - self.pad) / (self.width - 2 * self.pad) * (self.x_max - self.x_min)
        y = (self.height - self.pad - py) / (self.height - 2 * self.pad)
        return x, y


def plot_frame(rows: Sequence[MetricRow]) -> PlotFrame:
    xs = [r.sweep_value for r in rows]
    lo, hi = min(xs), max(xs)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    return PlotFrame(lo, hi)


def _curves(rows: Sequence[MetricRow]) -> Dict[str, List[Tuple[float, float]]]:
    curves: Dict[str, List[Tuple[float, float]]] = {}
    for r in aggregate_repeats(rows):
        curves.setdefault(r.model, []).append((r.sweep_value, r.test_acc))
    return {model: sorted(points) for model, points in sorted(curves.items())}


def render_svg(rows: Sequence[MetricRow], title: str = "") -> str:
    if not rows:
        raise DatasetError("nothing to plot")
    frame = plot_frame(rows)
    x_label = rows[0].sweep_name
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{PAD / 2:.1f}" text-anchor="middle" font-size="14">{title}</text>',
    ]
    x0, y0 = frame.to_svg(frame.x_min, 0.0)
    x1, y1 = frame.to_svg(frame.x_max, 1.0)
    parts.append(f'<line class="axis" x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y0:.2f}" stroke="black"/>')
    parts.append(f'<line class="axis" x1="{x0:.2f}" y1="{y0:.2f}" x2="{x0:.2f}" y2="{y1:.2f}" stroke="black"/>')
    for i in range(6):
        acc = i / 5
        _, py = frame.to_svg(frame.x_min, acc)
        parts.append(f'<text x="{x0 - 8:.2f}" y="{py + 4:.2f}" text-anchor="end" font-size="10">{acc:.1f}</text>')
    for value in sorted({r.sweep_value for r in rows}):
        px, _ = frame.to_svg(value, 0.0)
        parts.append(f'<text x="{px:.2f}" y="{y0 + 16:.2f}" text-anchor="middle" font-size="10">{value:g}</text>')
    parts.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="12">{x_label}</text>')
    parts.append(
        f'<text x="15" y="{HEIGHT / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {HEIGHT / 2:.1f})">test accuracy</text>'
    )

    for k, (model, points) in enumerate(_curves(rows).items()):
        color = COLORS.get(model, FALLBACK_COLORS[k % len(FALLBACK_COLORS)])
        pixels = [frame.to_svg(x, y) for x, y in points]
        if len(pixels) > 1:
            coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in pixels)
            parts.append(f'<polyline data-model="{model}" points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for px, py in pixels:
            parts.append(f'<circle data-model="{model}" cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color}"/>')
        ly = PAD + 16 * k
        parts.append(f'<rect x="{WIDTH - PAD - 60}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{WIDTH - PAD - 45}" y="{ly + 1}" font-size="11">{model}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(csv_path: str, out_path: str, task: Optional[str] = None) -> str:
    """
    Render one task of a metrics CSV (the first task when none is given).

    Raises:
        DatasetError: The CSV is empty or has no rows for the task.
    """
    rows = read_metrics_csv(csv_path)
    task = task or sorted({r.task for r in rows})[0]
    selected = [r for r in rows if r.task == task]
    if not selected:
        raise DatasetError(f"no rows for task {task!r} in {csv_path}")
    Path(out_path).write_text(render_svg(selected, title=task), encoding="utf-8")
    logger.info(f"Plot for {task} written to {out_path}")
    return out_path


def emit_plots(csv_path: str, out_dir: str) -> List[str]:
    """One <task>.svg per task found in the CSV."""
    tasks = sorted({r.task for r in read_metrics_csv(csv_path)})
    return [emit_plot(csv_path, str(Path(out_dir) / f"{sanitize_filename(t)}.svg"), t) for t in tasks]
