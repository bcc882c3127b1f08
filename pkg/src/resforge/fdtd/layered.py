"""Normal-incidence reflectance of planar stacks by FDTD.

The stack is simulated as a 2D TM problem one cell wide with a periodic
transverse axis, which makes it exactly one-dimensional.  Reflected power
is obtained by subtracting the fields of an empty reference run from the
total fields at a plane between the source and the stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry.raster import PermittivityGrid, layered_grid
from .domain import PmlParams, SimulationDomain
from .monitors import FluxMonitor, TimeProbe
from .solver import Simulation
from .sources import SourceSpec


@dataclass
class StackResult:
    """FDTD reflectance/transmittance plus the geometry actually simulated."""

    wavelengths: np.ndarray
    reflectance: np.ndarray
    transmittance: np.ndarray
    incident_flux: np.ndarray
    reflected_flux: np.ndarray
    transmitted_flux: np.ndarray
    layers: list[tuple[float, float]]
    dx: float
    steps: int
    warnings: list[str] = field(default_factory=list)


def stack_reflectance(layers, wavelengths, dx: float, n_in: float = 1.0, n_out: float = 1.0,
                      source_wavelength: float | None = None, bandwidth: float = 0.5,
                      pad: float = 1.0, decay_time: float | None = None,
                      workers: int | None = None, courant_factor: float = 0.5,
                      pml: PmlParams | None = None) -> StackResult:
    """Simulate a planar stack and return R(lambda), T(lambda).

    Parameters
    ----------
    layers : sequence of (n, thickness)
        From the incidence side.  Interfaces need not fall on cell
        boundaries; cut cells carry the averaged permittivity.
    wavelengths : array
        Wavelengths (um) at which fluxes are accumulated.
    dx : float
        Cell size (um).
    decay_time : float, optional
        Run time after the pulse ends.  Defaults to 40 round trips through
        the stack, enough for the multilayer ringing to die out.
    """
    pml = pml or PmlParams()
    wl = np.asarray(wavelengths, dtype=float)
    if source_wavelength is None:
        source_wavelength = 2.0 / (1.0 / wl.min() + 1.0 / wl.max())
    pml_len = pml.thickness * dx
    grid, rounded = layered_grid(layers, dx, n_in, n_out, pad_in=pad + pml_len, pad_out=pad + pml_len)
    out_layers = [(n, t) for (n, _), t in zip(layers, rounded)]
    ref_grid = PermittivityGrid(dx, np.full(grid.dims, n_in ** 2), grid.origin)
    x_stack = int(round((pad + pml_len) / dx)) * dx
    x_src = x_stack - 0.75 * pad
    x_mon = x_stack - 0.5 * pad
    x_tr = x_stack + sum(rounded) + 0.5 * pad
    src = SourceSpec(kind="plane_wave", wavelength=source_wavelength, fractional_bandwidth=bandwidth,
                     position=(x_src, 0.0), component="Ez", axis=0)
    if decay_time is None:
        optical = sum(n * t for n, t in out_layers) + 2 * pad * max(n_in, n_out)
        decay_time = 40.0 * optical
    until = src.end_time + decay_time
    bounds = ("pml", "periodic")

    def one(g, with_tr):
        dom = SimulationDomain(g, "TM", courant_factor, pml, bounds)
        mons = [FluxMonitor("r", wl, 0, x_mon)]
        if with_tr:
            mons.append(FluxMonitor("t", wl, 0, x_tr))
        sim = Simulation(dom, [src], mons, workers=workers)
        try:
            sim.run(until=until)
        finally:
            sim.close()
        return mons, sim

    ref_mons, _ = one(ref_grid, False)
    mons, sim = one(grid, True)
    incident = ref_mons[0].result()
    reflected = -mons[0].result(subtract=ref_mons[0])
    transmitted = mons[1].result()
    return StackResult(
        wavelengths=wl,
        reflectance=reflected / incident,
        transmittance=transmitted / incident,
        incident_flux=incident,
        reflected_flux=reflected,
        transmitted_flux=transmitted,
        layers=out_layers,
        dx=dx,
        steps=sim.step_count,
        warnings=list(sim.warnings),
    )


def pml_reflection(dx: float = 0.01, wavelength: float = 0.7, bandwidth: float = 0.5,
                   pml: PmlParams | None = None, gap: float = 1.0, workers: int | None = None) -> float:
    """Fraction of a normally incident pulse's energy reflected by the PML.

    A probe sits ``gap`` in front of the PML.  The same run in a domain long
    enough that nothing returns within the recording window supplies the
    incident field; the difference between the two probe traces is the
    reflection.
    """
    pml = pml or PmlParams()
    src_probe = 0.5
    d_pml = pml.thickness * dx
    src = SourceSpec(kind="plane_wave", wavelength=wavelength, fractional_bandwidth=bandwidth,
                     position=(d_pml + gap + src_probe, 0.0), component="Ez", axis=0)
    # record until the pulse has travelled to the PML and back, plus margin
    until = src.end_time + src_probe + 2.0 * gap + 2.0 * d_pml + src.end_time
    short_len = 2 * d_pml + gap + src_probe + gap + until  # the far side never returns in time either
    long_len = short_len + 2 * until

    def trace(length, left_extra):
        n = int(round(length / dx))
        grid = PermittivityGrid(dx, np.ones((n, 1)), (-left_extra, 0.0))
        dom = SimulationDomain(grid, "TM", 0.5, pml, ("pml", "periodic"))
        probe = TimeProbe("p", "Ez", point=(d_pml + gap, 0.0))
        sim = Simulation(dom, [src], [probe], workers=workers)
        try:
            sim.run(until=until)
        finally:
            sim.close()
        return probe.result()

    short = trace(short_len, 0.0)
    ref = trace(long_len, long_len - short_len)
    return float(np.sum((short - ref) ** 2) / np.sum(ref ** 2))
