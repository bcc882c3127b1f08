"""Optical materials and planar layer stacks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import GeometryError, MaterialError

#: Wavelength window (um) over which every material must satisfy n >= 1.
VISIBLE_WINDOW = (0.4, 1.0)


@dataclass(frozen=True)
class Material:
    """A dispersionless or tabulated dielectric.

    Parameters
    ----------
    name : str
        Lookup key.
    refractive_index : float, optional
        Constant index used when no table is given.
    table : sequence of (wavelength_um, n), optional
        Strictly increasing wavelengths; the index is linearly interpolated
        between nodes and lookups outside the table raise.
    """

    name: str
    refractive_index: float = 1.0
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.table is not None:
            table = tuple((float(w), float(n)) for w, n in self.table)
            wl = np.array([w for w, _ in table])
            if len(table) < 2 or np.any(np.diff(wl) <= 0):
                raise MaterialError(f"{self.name}: tabulated wavelengths must be strictly increasing")
            if min(n for _, n in table) < 1.0:
                raise MaterialError(f"{self.name}: refractive index below 1")
            object.__setattr__(self, "table", table)
        elif self.refractive_index < 1.0:
            raise MaterialError(f"{self.name}: refractive index below 1")

    @property
    def dispersive(self) -> bool:
        return self.table is not None

    def index(self, wavelength: float) -> float:
        if self.table is None:
            return float(self.refractive_index)
        wl = [w for w, _ in self.table]
        if wavelength < wl[0] or wavelength > wl[-1]:
            raise MaterialError(
                f"{self.name}: wavelength {wavelength} um outside table range [{wl[0]}, {wl[-1]}]"
            )
        return float(np.interp(wavelength, wl, [n for _, n in self.table]))

    def permittivity(self, wavelength: float) -> float:
        return self.index(wavelength) ** 2


# Silicon is treated as lossless; only its real index matters for the planar
# reflectance models this package uses it in.
_BUILTIN = {
    "TiO2": Material("TiO2", 2.35),
    "diamond": Material("diamond", 2.40),
    "fused_silica": Material("fused_silica", 1.45),
    "HSQ": Material("HSQ", 1.41),
    "Si": Material("Si", 3.70),
    "air": Material("air", 1.0),
}


class MaterialLibrary:
    """Name -> Material registry seeded with the built-in database.

    Each instance owns its own mapping, so user overrides never leak between
    experiments.
    """

    def __init__(self, overrides: dict[str, Material] | None = None):
        self._materials: dict[str, Material] = dict(_BUILTIN)
        for m in (overrides or {}).values():
            self.register(m)

    def register(self, material: Material) -> None:
        self._materials[material.name] = material

    def get(self, name: str) -> Material:
        try:
            return self._materials[name]
        except KeyError:
            raise MaterialError(f"unknown material {name!r}") from None

    def names(self) -> list[str]:
        return sorted(self._materials)

    def __contains__(self, name):
        return name in self._materials


DEFAULT_LIBRARY = MaterialLibrary()


def register_material(material: Material) -> None:
    """Add or replace a material in the default library."""
    DEFAULT_LIBRARY.register(material)


def get_material(name: str | Material, library: MaterialLibrary | None = None) -> Material:
    if isinstance(name, Material):
        return name
    return (library or DEFAULT_LIBRARY).get(name)


def material_lookup(name: str, wavelength: float, library: MaterialLibrary | None = None) -> float:
    """Refractive index of a named material at ``wavelength`` (um)."""
    return get_material(name, library).index(wavelength)


@dataclass
class LayerStack:
    """Planar layers listed bottom to top, plus the cover medium above them.

    The cover is the background the device layer sits in (air unless
    overridden).
    """

    layers: list[tuple[Material, float]] = field(default_factory=list)
    cover: Material = field(default_factory=lambda: _BUILTIN["air"])

    def __post_init__(self):
        self.layers = [(get_material(m), float(t)) for m, t in self.layers]
        self.cover = get_material(self.cover)
        for m, t in self.layers:
            if not t > 0:
                raise GeometryError(f"layer {m.name} has non-positive thickness {t}")

    @classmethod
    def from_names(cls, layers: Sequence[tuple[str, float]], cover: str = "air",
                   library: MaterialLibrary | None = None) -> "LayerStack":
        return cls([(get_material(n, library), t) for n, t in layers], get_material(cover, library))

    @property
    def thickness(self) -> float:
        return sum(t for _, t in self.layers)

    @property
    def top(self) -> Material:
        """Material directly beneath the device layer."""
        return self.layers[-1][0] if self.layers else self.cover

    def material_at(self, z: float) -> Material:
        """Material at height ``z``; z = 0 is the top surface of the stack."""
        if z >= 0 or not self.layers:
            return self.cover
        depth = -z
        for m, t in reversed(self.layers):
            if depth < t:
                return m
            depth -= t
        return self.layers[0][0]


def silica_stack() -> LayerStack:
    """Fused-silica substrate with air cover (ring and cavity devices on glass)."""
    return LayerStack([(_BUILTIN["fused_silica"], 2.0)])


def membrane_stack(diamond_thickness: float = 0.05, hsq_thickness: float = 0.5) -> LayerStack:
    """Si carrier / HSQ adhesion layer / thin diamond membrane, air cover."""
    return LayerStack([
        (_BUILTIN["Si"], 1.0),
        (_BUILTIN["HSQ"], hsq_thickness),
        (_BUILTIN["diamond"], diamond_thickness),
    ])
