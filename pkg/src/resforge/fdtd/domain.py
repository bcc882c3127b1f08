"""Simulation domain: grid, time step, boundaries and CPML profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import GeometryError
from ..geometry.raster import PermittivityGrid

#: Field components per simulation mode, E first.
COMPONENTS = {
    "TM": ("Ez", "Hx", "Hy"),
    "TE": ("Ex", "Ey", "Hz"),
    "3D": ("Ex", "Ey", "Ez", "Hx", "Hy", "Hz"),
}

# Yee offsets (in cells) of each component along (x, y, z).
_OFFSETS_2D = {
    "Ez": (0.0, 0.0), "Hx": (0.0, 0.5), "Hy": (0.5, 0.0),
    "Ex": (0.5, 0.0), "Ey": (0.0, 0.5), "Hz": (0.5, 0.5),
}
_OFFSETS_3D = {
    "Ex": (0.5, 0.0, 0.0), "Ey": (0.0, 0.5, 0.0), "Ez": (0.0, 0.0, 0.5),
    "Hx": (0.0, 0.5, 0.5), "Hy": (0.5, 0.0, 0.5), "Hz": (0.5, 0.5, 0.0),
}


def component_offsets(component: str, ndim: int) -> tuple[float, ...]:
    return (_OFFSETS_2D if ndim == 2 else _OFFSETS_3D)[component]


@dataclass(frozen=True)
class PmlParams:
    """Convolutional PML grading.

    sigma(rho) = sigma_max rho^order with sigma_max = sigma_scale (order+1)/dx,
    kappa(rho) = 1 + (kappa_max - 1) rho^order, alpha linear from alpha_max
    at the inner face to zero at the wall.
    """

    thickness: int = 12
    order: float = 3.0
    sigma_scale: float = 0.8
    kappa_max: float = 1.0
    alpha_max: float = 0.0

    def __post_init__(self):
        if self.thickness < 0:
            raise GeometryError("PML thickness must be >= 0")
        if not 2 <= self.order <= 4:
            raise GeometryError("PML polynomial order must lie in [2, 4]")


@dataclass
class SimulationDomain:
    """Everything the stepping loop needs apart from sources and monitors.

    Parameters
    ----------
    grid : PermittivityGrid
        2D or 3D permittivity.  Cells outside the PML keep their values; the
        PML itself is overlaid on the outermost ``pml.thickness`` cells.
    mode : {"TE", "TM"}
        Polarization for 2D grids ("TE" = in-plane E).  Ignored in 3D.
    courant_factor : float
        dt = courant_factor * dx.  Must not exceed 1/sqrt(ndim) unless
        ``allow_unstable`` is set (useful only for demonstrating the limit).
    boundaries : tuple of {"pml", "pec", "periodic"}
        One entry per axis.
    """

    grid: PermittivityGrid
    mode: str = "TE"
    courant_factor: float = 0.5
    pml: PmlParams = field(default_factory=PmlParams)
    boundaries: tuple[str, ...] | None = None
    allow_unstable: bool = False

    def __post_init__(self):
        nd = self.grid.ndim
        if nd == 3:
            self.mode = "3D"
        elif self.mode not in ("TE", "TM"):
            raise GeometryError("2D mode must be 'TE' or 'TM'")
        if self.boundaries is None:
            self.boundaries = ("pml",) * nd
        self.boundaries = tuple(self.boundaries)
        if len(self.boundaries) != nd:
            raise GeometryError("one boundary condition per axis required")
        for b in self.boundaries:
            if b not in ("pml", "pec", "periodic"):
                raise GeometryError(f"unknown boundary {b!r}")
        limit = 1.0 / math.sqrt(nd)
        if not self.courant_factor > 0:
            raise GeometryError("courant_factor must be > 0")
        if self.courant_factor > limit + 1e-15 and not self.allow_unstable:
            raise GeometryError(f"courant_factor {self.courant_factor} exceeds the {nd}D limit {limit:.4f}")
        for n, b in zip(self.grid.dims, self.boundaries):
            if b == "pml" and n <= 2 * self.pml.thickness:
                raise GeometryError("grid too small for the requested PML thickness")

    @property
    def ndim(self) -> int:
        return self.grid.ndim

    @property
    def dx(self) -> float:
        return self.grid.dx

    @property
    def dt(self) -> float:
        return self.courant_factor * self.grid.dx

    @property
    def shape(self) -> tuple[int, ...]:
        return self.grid.dims

    @property
    def components(self) -> tuple[str, ...]:
        return COMPONENTS[self.mode]

    @property
    def periodic(self) -> np.ndarray:
        return np.array([b == "periodic" for b in self.boundaries], dtype=np.bool_)

    def pml_cells(self, axis: int) -> int:
        return self.pml.thickness if self.boundaries[axis] == "pml" else 0

    def interior_slice(self, axis: int) -> tuple[int, int]:
        d = self.pml_cells(axis)
        return d, self.shape[axis] - d

    def in_interior(self, index) -> bool:
        for a, i in enumerate(index):
            lo, hi = self.interior_slice(a)
            if not lo <= i < hi:
                return False
        return True

    def index_of(self, point, component: str) -> tuple[int, ...]:
        """Nearest grid index of ``component`` to a physical point."""
        off = component_offsets(component, self.ndim)
        idx = []
        for a, p in enumerate(point):
            u = (p - self.grid.origin[a]) / self.dx - off[a]
            i = int(math.floor(u + 0.5))
            if not 0 <= i < self.shape[a]:
                raise GeometryError(f"point {tuple(point)} lies outside the grid")
            idx.append(i)
        return tuple(idx)

    def position_of(self, index, component: str) -> tuple[float, ...]:
        off = component_offsets(component, self.ndim)
        return tuple(self.grid.origin[a] + (i + off[a]) * self.dx for a, i in enumerate(index))

    # ------------------------------------------------------------ CPML profiles

    def cpml_coefficients(self, axis: int, half: bool):
        """(1/kappa, b, c) along ``axis`` at integer (half=False) or half nodes."""
        n = self.shape[axis]
        u = np.arange(n) + (0.5 if half else 0.0)
        inv_k = np.ones(n)
        b = np.ones(n)
        c = np.zeros(n)
        d = self.pml_cells(axis)
        if d == 0:
            return inv_k, b, c
        rho = np.zeros(n)
        left = u < d
        right = u > n - d
        rho[left] = (d - u[left]) / d
        rho[right] = (u[right] - (n - d)) / d
        p = self.pml
        sigma_max = p.sigma_scale * (p.order + 1) / self.dx
        sigma = sigma_max * rho ** p.order
        kappa = 1.0 + (p.kappa_max - 1.0) * rho ** p.order
        alpha = p.alpha_max * (1.0 - rho) * (rho > 0)
        dt = self.dt
        b = np.exp(-(sigma / kappa + alpha) * dt)
        denom = sigma * kappa + kappa ** 2 * alpha
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(denom > 0, sigma / denom * (b - 1.0), 0.0)
        return 1.0 / kappa, b, c

    # ------------------------------------------------------------ materials

    def component_eps(self, component: str) -> np.ndarray:
        """Permittivity seen by an E component: mean of the cells sharing its site.

        Along axes where the component sits on an integer node, the two
        adjacent cells are averaged (wrapping on periodic axes, clamping
        elsewhere); along half-node axes the containing cell is used.
        """
        eps = self.grid.eps
        off = component_offsets(component, self.ndim)
        out = eps
        for a, o in enumerate(off):
            if o == 0.0:
                if self.boundaries[a] == "periodic":
                    prev = np.roll(out, 1, axis=a)
                else:
                    idx = np.concatenate([[0], np.arange(out.shape[a] - 1)])
                    prev = np.take(out, idx, axis=a)
                out = 0.5 * (out + prev)
        return np.ascontiguousarray(out)
