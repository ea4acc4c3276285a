"""Oriented-box overlap in bird's-eye view and 3D IoU.

Boxes rotate about the vertical axis only, so the exact 3D overlap
factorizes into a rotated-rectangle intersection in the ground plane
times the vertical extent overlap.
"""

from __future__ import annotations

import math

from shapely.geometry import Polygon

from .core import Box3D


def bev_corners(box: Box3D) -> list[tuple[float, float]]:
    """Ground-plane corners of a box, counter-clockwise."""
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    hl, hw = box.length / 2.0, box.width / 2.0
    corners = []
    for dx, dy in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)):
        corners.append((box.cx + dx * c - dy * s, box.cy + dx * s + dy * c))
    return corners


def bev_polygon(box: Box3D) -> Polygon:
    return Polygon(bev_corners(box))


def bev_intersection_area(a: Box3D, b: Box3D) -> float:
    return bev_polygon(a).intersection(bev_polygon(b)).area


def vertical_overlap(a: Box3D, b: Box3D) -> float:
    top = min(a.cz + a.height / 2.0, b.cz + b.height / 2.0)
    bottom = max(a.cz - a.height / 2.0, b.cz - b.height / 2.0)
    return max(0.0, top - bottom)


def iou3d(a: Box3D, b: Box3D) -> float:
    """3D intersection-over-union of two yaw-oriented boxes.

    Rejects degenerate (zero-volume) boxes; result is in [0, 1] and 1
    only for identical extents and pose.
    """
    vol_a, vol_b = a.volume, b.volume
    if vol_a <= 0.0 or vol_b <= 0.0:
        raise ValueError("iou3d requires boxes with positive volume")
    inter = bev_intersection_area(a, b) * vertical_overlap(a, b)
    union = vol_a + vol_b - inter
    if union <= 0.0:
        return 0.0
    return min(1.0, inter / union)
