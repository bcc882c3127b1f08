"""Staircase rasterization of device scenes onto uniform permittivity grids."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import CellBudgetError, GeometryError
from .devices import DeviceSpec
from .materials import LayerStack, Material, get_material

log = logging.getLogger(__name__)

DEFAULT_CELL_BUDGET = 50_000_000


@dataclass
class PermittivityGrid:
    """Relative permittivity sampled at cell centres of a uniform grid.

    Cell ``(i, j[, k])`` spans ``origin + [i, i+1] * dx`` along each axis.
    ``labels`` optionally tags every cell with an index into ``label_names``
    (usually the material name), which downstream code uses for per-layer
    bookkeeping.
    """

    dx: float
    eps: np.ndarray
    origin: tuple[float, ...] = (0.0, 0.0)
    labels: np.ndarray | None = None
    label_names: tuple[str, ...] = ()

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        if self.eps.ndim not in (2, 3):
            raise GeometryError("PermittivityGrid must be 2D or 3D")
        if not self.dx > 0:
            raise GeometryError("dx must be > 0")
        if np.any(self.eps < 1.0):
            raise GeometryError("permittivity below 1")
        self.origin = tuple(float(o) for o in self.origin)
        if len(self.origin) != self.eps.ndim:
            raise GeometryError("origin dimensionality does not match eps")
        if self.labels is not None and self.labels.shape != self.eps.shape:
            raise GeometryError("labels shape does not match eps")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.eps.shape

    @property
    def ndim(self) -> int:
        return self.eps.ndim

    @property
    def size(self) -> tuple[float, ...]:
        return tuple(n * self.dx for n in self.eps.shape)

    def centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.eps.shape[axis]) + 0.5) * self.dx

    def index_of(self, point: Sequence[float]) -> tuple[int, ...]:
        """Cell index containing a physical point."""
        idx = tuple(int(math.floor((p - o) / self.dx)) for p, o in zip(point, self.origin))
        for i, n in zip(idx, self.eps.shape):
            if not 0 <= i < n:
                raise GeometryError(f"point {tuple(point)} lies outside the grid")
        return idx

    def n_max(self) -> float:
        return float(np.sqrt(self.eps.max()))

    def label_mask(self, name: str) -> np.ndarray:
        if self.labels is None or name not in self.label_names:
            raise GeometryError(f"grid carries no label {name!r}")
        return self.labels == self.label_names.index(name)


def _check_budget(shape, budget):
    n = int(np.prod(shape))
    if n > budget:
        raise CellBudgetError(f"grid of {n} cells exceeds the cell budget of {budget}")


def _axis(lo, hi, dx):
    """Cell count and origin of a symmetric-ish axis covering [lo, hi]."""
    n = max(1, int(math.ceil((hi - lo) / dx - 1e-9)))
    mid = 0.5 * (lo + hi)
    return n, mid - n * dx / 2


class _LabelTable:
    def __init__(self):
        self.names: list[str] = []

    def __call__(self, name):
        if name not in self.names:
            self.names.append(name)
        return self.names.index(name)


def rasterize(
    spec: DeviceSpec | None,
    stack: LayerStack,
    dx: float,
    padding: float = 1.0,
    view: str = "top",
    core: str | Material = "TiO2",
    wavelength: float | None = None,
    core_index: float | None = None,
    background_index: float | None = None,
    extent: tuple[float, float] | None = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
    wavelength_min: float | None = None,
) -> PermittivityGrid:
    """Sample a device scene on a uniform grid.

    Parameters
    ----------
    spec : RingSpec, PhcCavitySpec, GratingSpec or None
        Device geometry; ``None`` rasterizes the background only.
    stack : LayerStack
        Planar layers under the device.  In the ``"top"`` view only the cover
        enters (as the background) unless ``background_index`` overrides it.
    dx : float
        Cell size (um).
    padding : float
        Margin added around the device bounding box on every side.
    view : {"top", "3d"}
        ``"top"`` gives an (x, y) slice through the device layer; ``"3d"``
        gives (x, y, z) with z = 0 at the top of the stack.
    core : str or Material
        Device material.
    wavelength : float, optional
        Wavelength at which indices are evaluated (required for tabulated
        materials).
    core_index, background_index : float, optional
        Override the device / background index, e.g. with effective indices
        for a 2D collapse of a 3D structure.
    extent : (half_x, half_y), optional
        Override the device bounding box used for sizing.
    wavelength_min : float, optional
        Shortest wavelength the grid is meant for; a warning is emitted when
        ``dx`` exceeds ``wavelength_min / (20 n_max)``.

    Returns
    -------
    PermittivityGrid
    """
    if not dx > 0:
        raise GeometryError("dx must be > 0")
    if padding < 0:
        raise GeometryError("padding must be >= 0")
    wl = 0.7 if wavelength is None else wavelength
    core = get_material(core)
    n_core = core.index(wl) if core_index is None else float(core_index)
    n_bg = stack.cover.index(wl) if background_index is None else float(background_index)
    core_label = core.name
    labels = _LabelTable()

    if spec is None:
        half_x = half_y = 0.0
        height = 0.0
    else:
        half_x, half_y = spec.extent()
        height = spec.height
    if extent is not None:
        half_x, half_y = extent
    if spec is not None and (half_x <= 0 or half_y <= 0):
        raise GeometryError("degenerate device extent")

    nx, x0 = _axis(-half_x - padding, half_x + padding, dx)
    ny, y0 = _axis(-half_y - padding, half_y + padding, dx)
    if view == "top":
        shape = (nx, ny)
    elif view == "3d":
        nz, z0 = _axis(-padding, height + padding, dx)
        shape = (nx, ny, nz)
    else:
        raise GeometryError(f"unknown view {view!r}")
    _check_budget(shape, cell_budget)

    xs = x0 + (np.arange(nx) + 0.5) * dx
    ys = y0 + (np.arange(ny) + 0.5) * dx
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    in_device = np.zeros((nx, ny), dtype=bool)
    if spec is not None:
        bus_length = xs[-1] - xs[0] + 2 * dx
        for s in spec.shapes(bus_length=bus_length):
            in_device |= s.contains(X, Y)

    if view == "top":
        eps = np.full(shape, n_bg ** 2)
        lab = np.full(shape, labels(stack.cover.name if background_index is None else "background"),
                      dtype=np.int16)
        eps[in_device] = n_core ** 2
        lab[in_device] = labels(core_label)
        origin = (x0, y0)
    else:
        zs = z0 + (np.arange(shape[2]) + 0.5) * dx
        eps = np.empty(shape)
        lab = np.empty(shape, dtype=np.int16)
        for k, z in enumerate(zs):
            m = stack.material_at(z)
            eps[:, :, k] = m.index(wl) ** 2
            lab[:, :, k] = labels(m.name)
            if 0 <= z < height:
                eps[:, :, k][in_device] = n_core ** 2
                lab[:, :, k][in_device] = labels(core_label)
        origin = (x0, y0, z0)

    if wavelength_min is not None:
        n_max = math.sqrt(eps.max())
        if dx > wavelength_min / (20 * n_max):
            warnings.warn(
                f"dx={dx} exceeds lambda_min/(20 n_max)={wavelength_min / (20 * n_max):.4g}",
                stacklevel=2,
            )
    return PermittivityGrid(dx, eps, origin, lab, tuple(labels.names))


def waveguide_cross_section(
    width: float,
    height: float,
    stack: LayerStack,
    dx: float,
    padding: float = 1.0,
    core: str | Material = "TiO2",
    wavelength: float | None = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> PermittivityGrid:
    """Rectangular ridge on top of ``stack`` as a 2D (y, z) grid.

    Axis 0 is the in-plane transverse direction, axis 1 is vertical with
    z = 0 at the stack surface.
    """
    if not (width > 0 and height > 0):
        raise GeometryError("degenerate waveguide cross-section")
    wl = 0.7 if wavelength is None else wavelength
    core = get_material(core)
    labels = _LabelTable()
    ny, y0 = _axis(-width / 2 - padding, width / 2 + padding, dx)
    nz, z0 = _axis(-padding, height + padding, dx)
    _check_budget((ny, nz), cell_budget)
    ys = y0 + (np.arange(ny) + 0.5) * dx
    zs = z0 + (np.arange(nz) + 0.5) * dx
    eps = np.empty((ny, nz))
    lab = np.empty((ny, nz), dtype=np.int16)
    for k, z in enumerate(zs):
        m = stack.material_at(z)
        eps[:, k] = m.index(wl) ** 2
        lab[:, k] = labels(m.name)
    Y, Z = np.meshgrid(ys, zs, indexing="ij")
    core_mask = (np.abs(Y) < width / 2) & (Z >= 0) & (Z < height)
    eps[core_mask] = core.index(wl) ** 2
    lab[core_mask] = labels(core.name)
    return PermittivityGrid(dx, eps, (y0, z0), lab, tuple(labels.names))


def layered_grid(
    layers: Sequence[tuple[float, float]],
    dx: float,
    n_in: float = 1.0,
    n_out: float = 1.0,
    pad_in: float = 1.0,
    pad_out: float = 1.0,
    transverse_cells: int = 1,
) -> tuple[PermittivityGrid, list[float]]:
    """Planar stack along axis 0 for normal-incidence simulations.

    ``layers`` are (index, thickness) pairs in the order the incident wave
    meets them.  Cells cut by an interface hold the cell average of eps,
    which is the correct effective permittivity for fields parallel to the
    interfaces and keeps sub-cell thicknesses second-order accurate.  The
    second return value lists the thicknesses as represented (unchanged).
    """
    n_pad_in = int(round(pad_in / dx))
    n_pad_out = int(round(pad_out / dx))
    total = sum(t for _, t in layers)
    n_cells = n_pad_in + int(math.ceil(total / dx - 1e-9)) + n_pad_out
    # interface positions and eps on each side
    bounds = [0.0, n_pad_in * dx]
    eps_seq = [n_in ** 2]
    for n, t in layers:
        if t <= 0:
            raise GeometryError(f"layer thickness must be positive, got {t}")
        bounds.append(bounds[-1] + t)
        eps_seq.append(n ** 2)
    bounds.append(n_cells * dx)
    eps_seq.append(n_out ** 2)
    edges = np.arange(n_cells + 1) * dx
    # integral of eps from 0 to each cell edge, piecewise linear in position
    cum = np.zeros(len(bounds))
    cum[1:] = np.cumsum(np.diff(bounds) * np.asarray(eps_seq))
    integral = np.interp(edges, bounds, cum)
    profile = np.clip(np.diff(integral) / dx, min(eps_seq), max(eps_seq))
    eps = np.repeat(profile[:, None], transverse_cells, axis=1)
    return PermittivityGrid(dx, eps, (0.0, 0.0)), [float(t) for _, t in layers]
