"""Deterministic SVG rendering of partitions and boundaries."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

from .arrangement import Partition
from .boundary import PiecewiseLinearPath

PALETTE = (
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
    "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
)


@dataclass(frozen=True)
class SvgStyle:
    width: int = 600
    previous_edge: str = "#9a9a9a"
    current_edge: str = "#222222"
    boundary: str = "#d62728"
    stroke_scale: float = 0.003


def code_color(codes) -> str:
    key = "|".join(",".join(str(v) for v in c) for c in codes)
    return PALETTE[zlib.crc32(key.encode()) % len(PALETTE)]


def _f(v: float) -> str:
    return f"{v:.9g}"


def emit_svg(partition: Partition, boundary: PiecewiseLinearPath | None = None, style: SvgStyle = SvgStyle()) -> str:
    xmin, ymin, xmax, ymax = partition.domain.bounds
    w, h = xmax - xmin, ymax - ymin
    height = max(1, round(style.width * h / w))
    sw = _f(style.stroke_scale * max(w, h))
    # flip y so the input-space y axis points up
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{style.width}" height="{height}" '
        f'viewBox="{_f(xmin)} {_f(ymin)} {_f(w)} {_f(h)}">',
        f'<g transform="matrix(1 0 0 -1 0 {_f(ymin + ymax)})">',
        '<g class="cells" stroke="none">',
    ]
    for i, cell in enumerate(partition.cells):
        pts = cell.polygon.vertices
        d = "M " + " L ".join(f"{_f(x)} {_f(y)}" for x, y in pts) + " Z"
        out.append(f'<path id="cell-{i}" d="{d}" fill="{code_color(cell.codes)}"/>')
    out.append("</g>")
    for label, keep, color in (("previous-edges", lambda c: c.depth < partition.depth, style.previous_edge),
                               ("current-edges", lambda c: c.depth == partition.depth, style.current_edge)):
        out.append(f'<g class="{label}" stroke="{color}" stroke-width="{sw}" fill="none">')
        for c in partition.cuts:
            if keep(c):
                out.append(f'<line x1="{_f(c.p0[0])}" y1="{_f(c.p0[1])}" x2="{_f(c.p1[0])}" y2="{_f(c.p1[1])}"/>')
        out.append("</g>")
    if boundary is not None:
        out.append(f'<g class="decision-boundary" stroke="{style.boundary}" stroke-width="{_f(2 * float(sw))}" fill="none">')
        for chain in boundary.chains:
            pts = _chain_points(boundary, chain)
            out.append('<polyline points="' + " ".join(f"{_f(x)},{_f(y)}" for x, y in pts) + '"/>')
        out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _chain_points(path: PiecewiseLinearPath, chain: list[int]) -> list:
    segs = [path.segments[i] for i in chain]
    if len(segs) == 1:
        return [segs[0].p0, segs[0].p1]
    first, second = segs[0], segs[1]
    ends = (first.p0, first.p1)
    # orient the first segment so its far end leads into the second
    join = min(ends, key=lambda p: min(((p - second.p0) ** 2).sum(), ((p - second.p1) ** 2).sum()))
    start = ends[1] if join is ends[0] else ends[0]
    pts = [start]
    cur = start
    for s in segs:
        nxt = s.p1 if ((s.p0 - cur) ** 2).sum() <= ((s.p1 - cur) ** 2).sum() else s.p0
        pts.append(nxt)
        cur = nxt
    return pts
