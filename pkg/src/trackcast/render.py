"""Bird's-eye SVG rendering of a scene bundle.

Ground truth is gray, predictions take a stable per-class color, past
trajectories are dotted, futures solid, and each drawn agent gets one
SVG group carrying its score label. Output is plain SVG markup built
with the standard XML tree, so it is well formed by construction.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .core import AgentClass, Box3D
from .geometry import bev_corners
from .sceneio import SceneBundle

_GT_COLOR = "#888888"
_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#17becf",
    "#bcbd22",
    "#3a3a3a",
)
_CLASS_ORDER = {c: i for i, c in enumerate(AgentClass)}


def class_color(agent_class: AgentClass) -> str:
    return _PALETTE[_CLASS_ORDER[agent_class] % len(_PALETTE)]


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _polyline(points: list[tuple[float, float]], color: str, dotted: bool) -> ET.Element:
    el = ET.Element(
        "polyline",
        {
            "points": " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points),
            "fill": "none",
            "stroke": color,
            "stroke-width": "0.15",
        },
    )
    if dotted:
        el.set("stroke-dasharray", "0.4 0.4")
    return el


def _box_polygon(box: Box3D, color: str) -> ET.Element:
    corners = bev_corners(box)
    return ET.Element(
        "polygon",
        {
            "points": " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in corners),
            "fill": "none",
            "stroke": color,
            "stroke-width": "0.2",
        },
    )


def _label(x: float, y: float, text: str, color: str) -> ET.Element:
    el = ET.Element(
        "text",
        {
            "x": _fmt(x),
            "y": _fmt(y),
            "fill": color,
            "font-size": "1.5",
            "font-family": "sans-serif",
            # Undo the global y-flip so glyphs read upright.
            "transform": f"scale(1,-1) translate(0,{_fmt(-2 * y)})",
        },
    )
    el.text = text
    return el


def render_svg(bundle: SceneBundle, frame: int | None = None) -> str:
    """Render ground truth, tracks, and forecasts around one frame.

    The frame defaults to the forecasts' anchor when present, else the
    last frame of the scene.
    """
    if frame is None:
        frame = (
            bundle.forecasts[0].frame if bundle.forecasts else bundle.n_frames - 1
        )
    pad = 5.0
    extent = bundle.extent_m + pad
    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "viewBox": f"{_fmt(-extent)} {_fmt(-extent)} {_fmt(2 * extent)} {_fmt(2 * extent)}",
            "width": "800",
            "height": "800",
        },
    )
    world = ET.SubElement(svg, "g", {"transform": "scale(1,-1)"})
    ET.SubElement(
        world,
        "circle",
        {"cx": "0", "cy": "0", "r": "0.8", "fill": "none", "stroke": "#000000",
         "stroke-width": "0.2"},
    )

    for gt in bundle.gt_agents:
        box = gt.box_at(frame)
        if box is None:
            continue
        g = ET.SubElement(world, "g", {"id": f"gt-{gt.agent_id}"})
        g.append(_box_polygon(box, _GT_COLOR))
        past = [(b.cx, b.cy) for f, b in gt.boxes if f <= frame]
        future = [(b.cx, b.cy) for f, b in gt.boxes if f >= frame]
        if len(past) > 1:
            g.append(_polyline(past, _GT_COLOR, dotted=True))
        if len(future) > 1:
            g.append(_polyline(future, _GT_COLOR, dotted=False))

    for track in bundle.tracks:
        color = class_color(track.agent_class)
        g = ET.SubElement(world, "g", {"id": f"track-{track.track_id}"})
        past = [(p.box.cx, p.box.cy) for p in track.points if p.frame <= frame]
        if len(past) > 1:
            g.append(_polyline(past, color, dotted=True))
        point = track.point_at(frame) or track.points[-1]
        g.append(_box_polygon(point.box, color))
        g.append(
            _label(point.box.cx + 1.0, point.box.cy + 1.0, f"{track.score:.2f}", color)
        )

    for fc in bundle.forecasts:
        color = class_color(fc.agent_class)
        g = ET.SubElement(world, "g", {"id": f"forecast-{fc.agent_id}"})
        for mode in fc.forecast.modes:
            g.append(
                _polyline(
                    [fc.current, *mode.trajectory.waypoints], color, dotted=False
                )
            )
        g.append(_label(fc.current[0] + 1.0, fc.current[1] - 1.0, f"{fc.score:.2f}", color))

    return ET.tostring(svg, encoding="unicode") + "\n"
