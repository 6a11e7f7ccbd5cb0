"""SVG 1.1 rendering of scenes, robot-leaf slices and manipulation paths."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .decomposition import BLOCKED, FREE, MIXED, CellComplex
from .geometry import Scene
from .paths import ManipulationPath

FILL = {FREE: "#e6f4e6", MIXED: "#f7e3b5", BLOCKED: "#e0e0e0"}
SCALE = 400.0


def _f(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def frames(path: ManipulationPath, max_frames: int = 12) -> list[np.ndarray]:
    """Configurations at segment ends, thinned to ``max_frames``."""
    qs = [path.start] + [s.configs[-1] for s in path.segments]
    if len(qs) > max_frames:
        idx = np.unique(np.linspace(0, len(qs) - 1, max_frames).round().astype(int))
        qs = [qs[i] for i in idx]
    return qs


def render(
    scene: Scene,
    path: ManipulationPath | None = None,
    configs=(),
    leaf_slice: CellComplex | None = None,
) -> str:
    """Workspace drawing; y points up. Frames are numbered ``<g>`` groups."""
    xmin, ymin, xmax, ymax = scene.workspace
    s = SCALE / max(xmax - xmin, ymax - ymin)
    W, H = (xmax - xmin) * s, (ymax - ymin) * s

    def X(x):
        return _f((x - xmin) * s)

    def Y(y):
        return _f((ymax - y) * s)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_f(W)}" height="{_f(H)}" '
        f'viewBox="0 0 {_f(W)} {_f(H)}">',
        f'<rect x="0" y="0" width="{_f(W)}" height="{_f(H)}" fill="white" stroke="black"/>',
    ]
    if leaf_slice is not None:
        out.append('<g id="cells" stroke="none">')
        cx = leaf_slice
        for i in range(len(cx)):
            lo, hi = cx.lo[i], cx.hi[i]
            out.append(
                f'<rect x="{X(lo[0])}" y="{Y(hi[1])}" width="{_f((hi[0] - lo[0]) * s)}" '
                f'height="{_f((hi[1] - lo[1]) * s)}" fill="{FILL[int(cx.label[i])]}"/>'
            )
        out.append("</g>")
    out.append('<g id="obstacles" fill="#555555">')
    for poly in scene.obstacles:
        pts = " ".join(f"{X(x)},{Y(y)}" for x, y in poly.array)
        out.append(f'<polygon points="{pts}"/>')
    out.append("</g>")
    if path is not None and path.segments:
        out.append('<g id="path" fill="none" stroke-width="1.5">')
        for seg in path.segments:
            color = "#1f5fbf" if seg.kind == "TRANSIT" else "#c03020"
            pts = " ".join(f"{X(x)},{Y(y)}" for x, y in seg.robot_waypoints)
            out.append(f'<polyline points="{pts}" stroke="{color}"/>')
        out.append("</g>")
    qs = list(configs) or (frames(path) if path is not None else [])
    for k, q in enumerate(qs):
        q = np.asarray(q, dtype=float)
        out.append(f'<g id="frame-{k}" opacity="0.6">')
        out.append(f"<title>{escape(f'frame {k}')}</title>")
        out.append(
            f'<circle cx="{X(q[0])}" cy="{Y(q[1])}" r="{_f(scene.robot_radius * s)}" fill="#1f5fbf"/>'
        )
        for j, obj in enumerate(scene.objects):
            out.append(
                f'<circle cx="{X(q[2 + 2 * j])}" cy="{Y(q[3 + 2 * j])}" r="{_f(obj.radius * s)}" '
                f'fill="#e08a1e"><title>{escape(obj.id)}</title></circle>'
            )
        out.append(f'<text x="{X(q[0])}" y="{Y(q[1])}" font-size="10" text-anchor="middle">{k}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
