"""Floorplan SVG emitter.

Columns draw as vertical strips colored by block type, occupied sites as
filled cells, and each unit's bounding box as an outline. A single unit can
be highlighted with a bolder polygon for close inspection.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .design import DesignSpec
from .device import BlockType, Device
from .genotype import Placement

_FILL = {BlockType.DSP: "#cfe8ff", BlockType.BRAM: "#ffe3c2", BlockType.URAM: "#dcf5dc"}
_SITE = {BlockType.DSP: "#1f77b4", BlockType.BRAM: "#ff7f0e", BlockType.URAM: "#2ca02c"}
_CELL = 10
_PAD = 14


def _rect(x, y, w, h, fill, stroke="none", width=1.0, opacity=1.0, cls=""):
    cls_attr = f' class="{cls}"' if cls else ""
    return (f'<rect{cls_attr} x="{x:.1f}" y="{y:.1f}" width="{w:.1f}" '
            f'height="{h:.1f}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{width:.1f}" opacity="{opacity:.2f}"/>')


def floorplan_svg(device: Device, placement: Placement | None = None,
                  design: DesignSpec | None = None,
                  highlight_unit: int | None = None) -> str:
    """Render a device (and optionally a placement) as an SVG document."""
    width = device.xmax * _CELL + 2 * _PAD
    height = device.ymax * _CELL + 2 * _PAD

    def px(x: float) -> float:
        return _PAD + x * _CELL

    def py(y: float) -> float:
        # fabric row 0 is the bottom edge
        return _PAD + (device.ymax - y) * _CELL

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f"<title>{escape(device.name)}</title>",
        _rect(0, 0, width, height, "#ffffff"),
    ]
    for col in device.columns:
        parts.append(_rect(px(col.x), py(col.y_sites), _CELL,
                           col.y_sites * _CELL, _FILL[col.block_type],
                           stroke="#999999", width=0.5, cls="column"))
    for slr in range(1, device.slr_count):
        y = py(slr * device.slr_height)
        parts.append(f'<line x1="{_PAD}" y1="{y:.1f}" x2="{width - _PAD}" '
                     f'y2="{y:.1f}" stroke="#cc3333" stroke-width="1.5" '
                     f'stroke-dasharray="6,3"/>')

    if placement is not None:
        for bt, x, y in zip(placement.block_types, placement.xs, placement.ys):
            parts.append(_rect(px(int(x)) + 1, py(int(y) + 1) + 1, _CELL - 2,
                               _CELL - 2, _SITE[bt], cls="site"))
        if design is not None:
            pos = {bid: i for i, bid in enumerate(placement.block_ids)}
            units: dict[int, list[int]] = {}
            for b in design.blocks:
                if b.id in pos:
                    units.setdefault(b.unit, []).append(pos[b.id])
            for u, idxs in sorted(units.items()):
                xs = [int(placement.xs[i]) for i in idxs]
                ys = [int(placement.ys[i]) for i in idxs]
                x0, x1 = min(xs), max(xs) + 1
                y0, y1 = min(ys), max(ys) + 1
                strong = highlight_unit is not None and u == highlight_unit
                parts.append(_rect(px(x0) - 1, py(y1) - 1,
                                   (x1 - x0) * _CELL + 2,
                                   (y1 - y0) * _CELL + 2, "none",
                                   stroke="#d62728" if strong else "#555555",
                                   width=2.5 if strong else 1.0,
                                   cls="unit-bbox"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
