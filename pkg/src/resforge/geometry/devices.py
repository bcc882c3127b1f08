"""Parameterized device geometries.

Every device is described in its own local frame: x runs along the bus or
beam axis, y is transverse in the chip plane, and the device centroid sits at
the origin.  Devices expose two views of the same shape: a vectorized
membership test used by the rasterizer and a polygon list used by the layout
exporter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Union

import numpy as np

from ..errors import GeometryError

#: Circles are discretized with this many vertices in polygon output.
CIRCLE_VERTICES = 256


@dataclass(frozen=True)
class Rect:
    cx: float
    cy: float
    w: float
    h: float

    def contains(self, x, y):
        return (np.abs(x - self.cx) < self.w / 2) & (np.abs(y - self.cy) < self.h / 2)

    def polygon(self):
        x0, x1 = self.cx - self.w / 2, self.cx + self.w / 2
        y0, y1 = self.cy - self.h / 2, self.cy + self.h / 2
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]

    @property
    def area(self):
        return self.w * self.h


@dataclass(frozen=True)
class Annulus:
    cx: float
    cy: float
    r_in: float
    r_out: float

    def contains(self, x, y):
        r2 = (x - self.cx) ** 2 + (y - self.cy) ** 2
        return (r2 < self.r_out ** 2) & (r2 >= self.r_in ** 2)

    def polygon(self, n=CIRCLE_VERTICES):
        # keyhole polygon: outer circle counter-clockwise, inner clockwise
        t = 2 * np.pi * np.arange(n + 1) / n
        outer = [(self.cx + self.r_out * math.cos(a), self.cy + self.r_out * math.sin(a)) for a in t]
        inner = [(self.cx + self.r_in * math.cos(a), self.cy + self.r_in * math.sin(a)) for a in t[::-1]]
        return outer + inner

    @property
    def area(self):
        return math.pi * (self.r_out ** 2 - self.r_in ** 2)


def _positive(name, value):
    if not value > 0:
        raise GeometryError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class RingSpec:
    """Add-drop ring: one loop between two straight buses.

    ``radius`` is measured to the waveguide centreline; ``gap_1`` / ``gap_2``
    are edge-to-edge distances to the lower and upper bus.
    """

    radius: float = 5.0
    waveguide_width: float = 0.30
    waveguide_height: float = 0.25
    gap_1: float = 0.375
    gap_2: float = 0.375
    bus_width: float = 0.30
    bus_length: float | None = None

    kind = "ring"

    def __post_init__(self):
        for n in ("radius", "waveguide_width", "waveguide_height", "bus_width"):
            _positive(n, getattr(self, n))
        if self.gap_1 < 0 or self.gap_2 < 0:
            raise GeometryError("ring gaps must be >= 0")
        if self.waveguide_width >= 2 * self.radius:
            raise GeometryError("ring waveguide wider than its diameter")

    @property
    def height(self):
        return self.waveguide_height

    def bus_offsets(self):
        r_out = self.radius + self.waveguide_width / 2
        return (-(r_out + self.gap_1 + self.bus_width / 2), r_out + self.gap_2 + self.bus_width / 2)

    def extent(self):
        """Half-widths (along x, along y) of the device bounding box."""
        lo, hi = self.bus_offsets()
        half_y = max(-lo, hi) + self.bus_width / 2
        return self.resolved_bus_length / 2, half_y

    @property
    def resolved_bus_length(self):
        if self.bus_length is not None:
            return self.bus_length
        return 2 * (self.radius + self.waveguide_width) + 4.0

    def shapes(self, bus_length=None):
        L = self.resolved_bus_length if bus_length is None else bus_length
        lo, hi = self.bus_offsets()
        w = self.waveguide_width
        return [
            Annulus(0.0, 0.0, self.radius - w / 2, self.radius + w / 2),
            Rect(0.0, lo, L, self.bus_width),
            Rect(0.0, hi, L, self.bus_width),
        ]


@dataclass(frozen=True)
class PhcCavitySpec:
    """1D photonic-crystal cavity: a straight beam crossed by rectangular fins.

    The fin pitch is constant (``mirror_pitch``) in the mirrors and shrinks
    linearly by ``taper_fraction`` over ``n_taper_fins`` fins towards the
    centre.  Fin dimensions and pitch defaults are tunable design values.
    """

    waveguide_width: float = 0.15
    waveguide_height: float = 0.25
    fin_width: float = 0.10
    fin_length: float = 0.45
    mirror_pitch: float = 0.28
    n_mirror_fins: int = 25
    taper_fraction: float = 0.10
    n_taper_fins: int = 5
    lead_length: float = 1.0

    kind = "phc"

    def __post_init__(self):
        for n in ("waveguide_width", "waveguide_height", "fin_width", "fin_length", "mirror_pitch"):
            _positive(n, getattr(self, n))
        if not 0 < self.taper_fraction < 1:
            raise GeometryError("taper_fraction must lie in (0, 1)")
        if self.n_mirror_fins < 0:
            raise GeometryError("n_mirror_fins must be >= 0")
        if self.n_taper_fins < 1:
            raise GeometryError("n_taper_fins must be >= 1")
        if self.mirror_pitch * (1 - self.taper_fraction) <= self.fin_width:
            raise GeometryError("tapered pitch must exceed fin_width")

    @property
    def height(self):
        return self.waveguide_height

    @property
    def n_fins(self):
        return 2 * (self.n_mirror_fins + self.n_taper_fins)

    def fin_centers(self):
        return fin_centers(generate_taper(self))

    @property
    def beam_length(self):
        c = self.fin_centers()
        return float(c[-1] - c[0]) + self.fin_width + 2 * self.lead_length

    def extent(self):
        return self.beam_length / 2, max(self.fin_length, self.waveguide_width) / 2

    def shapes(self, bus_length=None):
        L = self.beam_length if bus_length is None else bus_length
        out = [Rect(0.0, 0.0, L, self.waveguide_width)]
        out += [Rect(float(x), 0.0, self.fin_width, self.fin_length) for x in self.fin_centers()]
        return out


@dataclass(frozen=True)
class GratingSpec:
    """Generic grating coupler: ``n_teeth`` rectangular teeth of a given period."""

    period: float = 0.45
    duty_cycle: float = 0.5
    n_teeth: int = 20
    width: float = 3.0
    height: float = 0.25

    kind = "grating"

    def __post_init__(self):
        _positive("period", self.period)
        _positive("width", self.width)
        _positive("height", self.height)
        if not 0 < self.duty_cycle < 1:
            raise GeometryError("duty_cycle must lie in (0, 1)")
        if self.n_teeth < 1:
            raise GeometryError("n_teeth must be >= 1")

    def extent(self):
        return self.n_teeth * self.period / 2, self.width / 2

    def shapes(self, bus_length=None):
        tooth = self.period * self.duty_cycle
        x0 = -self.n_teeth * self.period / 2 + tooth / 2
        return [Rect(x0 + k * self.period, 0.0, tooth, self.width) for k in range(self.n_teeth)]


DeviceSpec = Union[RingSpec, PhcCavitySpec, GratingSpec]

DEVICE_TYPES = {"ring": RingSpec, "phc": PhcCavitySpec, "grating": GratingSpec}


def device_from_dict(d: dict) -> DeviceSpec:
    d = dict(d)
    kind = d.pop("kind")
    try:
        cls = DEVICE_TYPES[kind]
    except KeyError:
        raise GeometryError(f"unknown device kind {kind!r}") from None
    return cls(**d)


def device_to_dict(spec: DeviceSpec) -> dict:
    return {"kind": spec.kind, **asdict(spec)}


def generate_taper(spec: PhcCavitySpec) -> np.ndarray:
    """Fin pitches from left to right, palindromic about the cavity centre.

    Each side holds ``n_mirror_fins`` fins at the mirror pitch followed by
    ``n_taper_fins`` fins whose pitch drops linearly to
    ``(1 - taper_fraction) * mirror_pitch`` at the centre.
    """
    p = spec.mirror_pitch
    k = np.arange(1, spec.n_taper_fins + 1)
    taper = p * (1.0 - spec.taper_fraction * k / spec.n_taper_fins)
    # centre -> outward for one side
    side = np.concatenate([taper[::-1], np.full(spec.n_mirror_fins, p)])
    return np.concatenate([side[::-1], side])


def fin_centers(pitches: np.ndarray) -> np.ndarray:
    """Fin centre positions for a palindromic pitch sequence.

    Pitch ``k`` of a side is the spacing between fin ``k`` and its inward
    neighbour; the innermost pitch separates the two central fins.
    """
    pitches = np.asarray(pitches, dtype=float)
    half = len(pitches) // 2
    side = pitches[half:]
    right = side[0] / 2 + np.concatenate([[0.0], np.cumsum(side[1:])])
    return np.concatenate([-right[::-1], right])
