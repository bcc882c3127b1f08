"""Mode volume, position-resolved Purcell enhancement and cooperativity."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import GeometryError
from ..fdtd.domain import SimulationDomain, component_offsets

PURCELL_PREFACTOR = 3.0 / (4.0 * math.pi ** 2)
#: Field at the domain edge above this fraction of the peak suggests truncation.
TRUNCATION_LEVEL = 0.01


def energy_density(snapshot: dict, domain: SimulationDomain) -> np.ndarray:
    """eps |E|^2 on the integer nodes of the grid from a DFT snapshot.

    Each E component's energy density is formed at its own Yee site, then
    averaged onto the nodes along the axes where the site sits half a cell
    off.
    """
    total = np.zeros(domain.shape)
    for comp in domain.components:
        if comp[0] != "E" or comp not in snapshot:
            continue
        u = domain.component_eps(comp) * np.abs(snapshot[comp]) ** 2
        for a, off in enumerate(component_offsets(comp, domain.ndim)):
            if off:
                if domain.periodic[a]:
                    u = 0.5 * (u + np.roll(u, 1, axis=a))
                else:
                    idx = np.concatenate([[0], np.arange(u.shape[a] - 1)])
                    u = 0.5 * (u + np.take(u, idx, axis=a))
        total += u
    return total


@dataclass
class ModeVolume:
    """Mode volume in um^d and in (lambda/n_ref)^d units (d = grid dimension)."""

    volume: float
    normalized: float
    n_ref: float
    peak_index: tuple[int, ...]
    truncated: bool = False

    def to_dict(self) -> dict:
        return {"volume_um": self.volume, "volume_normalized": self.normalized,
                "n_ref": self.n_ref, "peak_index": list(self.peak_index), "truncated": self.truncated}


def _check_peak(u, peak, pml_cells):
    if pml_cells:
        for i, n in zip(peak, u.shape):
            if i < pml_cells or i >= n - pml_cells:
                raise GeometryError("field maximum lies in the PML: invalid snapshot")


def _edge_max(u):
    m = 0.0
    for a in range(u.ndim):
        m = max(m, float(np.take(u, 0, axis=a).max()), float(np.take(u, -1, axis=a).max()))
    return m


def mode_volume(u: np.ndarray, eps: np.ndarray, dx: float, wavelength: float,
                pml_cells: int = 0) -> ModeVolume:
    """V = sum(eps|E|^2) dV / max(eps|E|^2) by the midpoint rule.

    Parameters
    ----------
    u : array
        Energy density eps |E|^2 (arbitrary normalization).
    eps : array
        Relative permittivity at the same points.
    pml_cells : int
        Width of the absorbing layer at the array edges; a peak inside it
        invalidates the snapshot.
    """
    u = np.asarray(u, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if u.shape != eps.shape:
        raise GeometryError("field and permittivity shapes differ")
    if not np.any(u > 0):
        raise GeometryError("field snapshot is identically zero")
    peak = np.unravel_index(int(np.argmax(u)), u.shape)
    _check_peak(u, peak, pml_cells)
    truncated = False
    inner = u
    if pml_cells:
        inner = u[tuple(slice(pml_cells, n - pml_cells) for n in u.shape)]
    # energy density scales as |E|^2, so compare field amplitudes through sqrt
    if u.ndim and min(inner.shape) > 1 and math.sqrt(_edge_max(inner) / u[peak]) > TRUNCATION_LEVEL:
        truncated = True
        warnings.warn("mode field has not decayed to 1% at the domain edge: volume is truncated",
                      stacklevel=2)
    dV = dx ** u.ndim
    volume = float(np.sum(u)) * dV / float(u[peak])
    n_ref = math.sqrt(float(eps[peak]))
    return ModeVolume(volume, volume / (wavelength / n_ref) ** u.ndim, n_ref, tuple(int(i) for i in peak), truncated)


@dataclass
class PurcellMap:
    """Position-resolved Purcell factor.

    ``F_max`` is the maximum over the array.  ``F_at_field_max`` is the
    value where eps|E|^2 peaks, which equals (3/4pi^2) Q / V in
    (lambda/n_ref)^3 units.  ``F_in_layer`` maps region labels to the
    maximum inside that region.
    """

    F: np.ndarray
    F_max: float
    F_at_field_max: float
    F_in_layer: dict[str, float]
    q: float
    wavelength: float
    mode_volume: ModeVolume
    argmax: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        return {"F_max": self.F_max, "F_at_field_max": self.F_at_field_max,
                "F_in_layer": dict(self.F_in_layer), "q": self.q, "wavelength_um": self.wavelength,
                "argmax": list(self.argmax), "mode_volume": self.mode_volume.to_dict()}


def purcell_map(u: np.ndarray, eps: np.ndarray, dx: float, q: float, wavelength: float,
                labels: np.ndarray | None = None, label_names=(), pml_cells: int = 0,
                volume_scale: float = 1.0) -> PurcellMap:
    """F(r) = (3/4pi^2) (lambda/n(r))^3 Q eps(r)|E(r)|^2 / integral(eps|E|^2 dV).

    For 2D fields the integral is an area; ``volume_scale`` (um) supplies
    the out-of-plane length that turns it into a volume, e.g. the effective
    thickness of the vertical slab mode.
    """
    if not q > 0:
        raise ValueError("Q must be > 0")
    u = np.asarray(u, dtype=float)
    eps = np.asarray(eps, dtype=float)
    mv = mode_volume(u, eps, dx, wavelength, pml_cells)
    integral = float(np.sum(u)) * dx ** u.ndim * volume_scale
    n = np.sqrt(eps)
    F = PURCELL_PREFACTOR * (wavelength / n) ** 3 * q * u / integral
    peak = mv.peak_index
    amax = np.unravel_index(int(np.argmax(F)), F.shape)
    per_layer = {}
    if labels is not None:
        for k, name in enumerate(label_names):
            m = labels == k
            if np.any(m):
                per_layer[name] = float(F[m].max())
    return PurcellMap(F, float(F[amax]), float(F[peak]), per_layer, q, wavelength, mv,
                      tuple(int(i) for i in amax))


def purcell_factor(q: float, volume_normalized: float) -> float:
    """(3/4pi^2) Q / V with V in (lambda/n)^3 units."""
    if not (q > 0 and volume_normalized > 0):
        raise ValueError("Q and V must be > 0")
    return PURCELL_PREFACTOR * q / volume_normalized


@dataclass(frozen=True)
class Cooperativity:
    """C = F xi_DW eta / (gamma_total / gamma_radiative), with its inputs."""

    c: float
    purcell: float
    debye_waller: float
    quantum_efficiency: float
    dephasing_ratio: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def cooperativity(purcell: float, debye_waller: float = 0.7, quantum_efficiency: float = 0.1,
                  dephasing_ratio: float = 1.0) -> Cooperativity:
    """Emitter-cavity cooperativity estimate; defaults are typical of SiV centres."""
    if purcell < 0:
        raise ValueError("Purcell factor must be >= 0")
    if not 0 < debye_waller <= 1:
        raise ValueError("Debye-Waller factor must lie in (0, 1]")
    if not 0 < quantum_efficiency <= 1:
        raise ValueError("quantum efficiency must lie in (0, 1]")
    if dephasing_ratio < 1:
        raise ValueError("dephasing ratio must be >= 1")
    c = purcell * debye_waller * quantum_efficiency / dephasing_ratio
    return Cooperativity(c, purcell, debye_waller, quantum_efficiency, dephasing_ratio)
