"""Lithography-template layout: placed device polygons, JSON and SVG export."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..errors import GeometryError
from .devices import DeviceSpec, device_to_dict

SVG_SCALE = 10.0  # user units per um


@dataclass
class Polygon:
    layer: str
    points: list[tuple[float, float]]
    device: int = -1

    def area(self) -> float:
        p = np.asarray(self.points)
        x, y = p[:, 0], p[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass
class LayoutDocument:
    bbox: tuple[float, float]
    polygons: list[Polygon] = field(default_factory=list)
    devices: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    def to_dict(self) -> dict:
        return {
            "units": "um",
            "bbox": [float(self.bbox[0]), float(self.bbox[1])],
            "polygons": [
                {"layer": p.layer, "device": p.device, "points": [[float(x), float(y)] for x, y in p.points]}
                for p in self.polygons
            ],
            "devices": self.devices,
            "warnings": list(self.warnings),
        }

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "LayoutDocument":
        polys = [Polygon(p["layer"], [tuple(pt) for pt in p["points"]], p.get("device", -1))
                 for p in d["polygons"]]
        return cls(tuple(d["bbox"]), polys, list(d.get("devices", [])), list(d.get("warnings", [])))

    def to_svg(self) -> str:
        """SVG preview; 1 um = 10 user units, y axis pointing up."""
        w, h = self.bbox
        W, H = w * SVG_SCALE, h * SVG_SCALE
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.1f}" height="{H:.1f}" '
            f'viewBox="0 0 {W:.1f} {H:.1f}">',
            "<style>path{fill:#3b6ea5;fill-rule:evenodd;stroke:none}"
            " .device{fill:#3b6ea5} rect.frame{fill:none;stroke:#888;stroke-width:1}</style>",
            f'<rect class="frame" x="0" y="0" width="{W:.1f}" height="{H:.1f}"/>',
        ]
        for p in self.polygons:
            pts = [(x * SVG_SCALE, H - y * SVG_SCALE) for x, y in p.points]
            d = "M " + " L ".join(f"{x:.3f} {y:.3f}" for x, y in pts) + " Z"
            out.append(f'<path class="{p.layer}" d="{d}"/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _rotation(deg: float) -> np.ndarray:
    q = deg / 90.0
    if abs(q - round(q)) < 1e-12:
        c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][int(round(q)) % 4]
    else:
        a = math.radians(deg)
        c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]], dtype=float)


def device_polygons(spec: DeviceSpec, position=(0.0, 0.0), rotation: float = 0.0,
                    layer: str = "TiO2") -> list[Polygon]:
    """Polygons of one device, rotated about its centroid then translated."""
    R = _rotation(rotation)
    off = np.asarray(position, dtype=float)
    out = []
    for s in spec.shapes():
        pts = np.asarray(s.polygon(), dtype=float) @ R.T + off
        out.append(Polygon(layer, [tuple(map(float, p)) for p in pts]))
    return out


def _boxes_overlap(a, b):
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def export_layout(
    placements: Iterable[tuple[DeviceSpec, Sequence[float], float]],
    bbox: tuple[float, float],
    layer: str = "TiO2",
) -> LayoutDocument:
    """Place devices in a ``bbox = (w, h)`` field with origin at its lower-left corner.

    Each placement is ``(spec, (x, y), rotation_deg)``.  Devices must stay
    inside the field; overlapping devices are reported in
    ``LayoutDocument.warnings`` rather than rejected.
    """
    w, h = bbox
    if not (w > 0 and h > 0):
        raise GeometryError("bounding box must have positive size")
    doc = LayoutDocument((float(w), float(h)))
    boxes = []
    for k, (spec, pos, rot) in enumerate(placements):
        polys = device_polygons(spec, pos, rot, layer)
        pts = np.concatenate([np.asarray(p.points) for p in polys])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        if lo[0] < -1e-9 or lo[1] < -1e-9 or hi[0] > w + 1e-9 or hi[1] > h + 1e-9:
            raise GeometryError(f"device {k} at {tuple(pos)} extends outside the {w}x{h} um field")
        box = (lo[0], lo[1], hi[0], hi[1])
        for j, other in enumerate(boxes):
            if _boxes_overlap(box, other):
                doc.warnings.append(f"device {k} overlaps device {j}")
        boxes.append(box)
        for p in polys:
            p.device = k
        doc.polygons.extend(polys)
        doc.devices.append({"index": k, "spec": device_to_dict(spec),
                            "position": [float(pos[0]), float(pos[1])], "rotation": float(rot)})
    return doc


def grid_placements(spec: DeviceSpec, bbox: tuple[float, float], n_cols: int, n_rows: int,
                    rotations: Sequence[float] = (0.0,)) -> list:
    """Regular array of one device, cycling through ``rotations``."""
    w, h = bbox
    out = []
    for r in range(n_rows):
        for c in range(n_cols):
            k = r * n_cols + c
            out.append((spec, ((c + 0.5) * w / n_cols, (r + 0.5) * h / n_rows),
                        rotations[k % len(rotations)]))
    return out
