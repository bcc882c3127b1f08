"""Time probes, running DFT monitors and Poynting-flux planes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import MonitorError
from .domain import component_offsets

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))
_NAMES = "xyz"


class TimeProbe:
    """Records one field component at one grid site every step."""

    def __init__(self, name: str, component: str, point=None, index=None):
        if (point is None) == (index is None):
            raise MonitorError("give exactly one of point or index")
        self.name = name
        self.component = component
        self.point = point
        self.index = index
        self.values: list[float] = []
        self.start_step = 0

    def attach(self, sim):
        if self.component not in sim.domain.components:
            raise MonitorError(f"{self.component} is not simulated in mode {sim.domain.mode}")
        if self.index is None:
            try:
                self.index = sim.domain.index_of(self.point, self.component)
            except Exception as exc:
                raise MonitorError(str(exc)) from None
        for i, n in zip(self.index, sim.domain.shape):
            if not 0 <= i < n:
                raise MonitorError(f"probe {self.name} outside the grid")
        self._arr = sim.fields[self.component]
        self.start_step = sim.step_count

    def record(self, sim):
        self.values.append(float(self._arr[self.index]))

    def result(self):
        return np.asarray(self.values)


class DftMonitor:
    """Running discrete Fourier transform of field components over a region.

    F(lambda) = sum_n f(t_n) exp(i omega t_n) dt with t_n the physical time
    of each sample (E and H are half a step apart).
    """

    def __init__(self, name: str, wavelengths, components=None, region=None):
        self.name = name
        self.wavelengths = np.atleast_1d(np.asarray(wavelengths, dtype=float))
        self.components = components
        self.region = region
        self.data: dict[str, np.ndarray] = {}

    def attach(self, sim):
        dom = sim.domain
        comps = self.components or dom.components
        self.components = tuple(comps)
        for c in self.components:
            if c not in dom.components:
                raise MonitorError(f"{c} is not simulated in mode {dom.mode}")
        if self.region is None:
            self.region = tuple(slice(0, n) for n in dom.shape)
        for s, n in zip(self.region, dom.shape):
            if s.start < 0 or s.stop > n or s.start >= s.stop:
                raise MonitorError(f"monitor {self.name} region outside the grid")
        shape = tuple(s.stop - s.start for s in self.region)
        self.data = {c: np.zeros((len(self.wavelengths),) + shape, dtype=complex) for c in self.components}
        self._omega = 2 * math.pi / self.wavelengths
        self._dt = dom.dt
        max_n = dom.grid.n_max()
        ppw = self.wavelengths.min() / (max_n * dom.dx)
        if ppw < 10:
            sim.warn(f"monitor {self.name}: only {ppw:.1f} grid points per wavelength in the "
                     "highest-index material")

    def record(self, sim):
        tE, tH = sim.time_e, sim.time_h
        phE = np.exp(1j * self._omega * tE) * self._dt
        phH = np.exp(1j * self._omega * tH) * self._dt
        for c in self.components:
            f = sim.fields[c][self.region]
            ph = phE if c[0] == "E" else phH
            acc = self.data[c]
            acc += ph.reshape((-1,) + (1,) * f.ndim) * f[None]

    def result(self):
        return {"wavelengths": self.wavelengths, **self.data}


def _shift_avg(a, axis, lo_first, periodic):
    """Average neighbours along ``axis``: (a[k-1]+a[k])/2 if lo_first else (a[k]+a[k+1])/2."""
    n = a.shape[axis]
    if periodic:
        other = np.roll(a, 1 if lo_first else -1, axis=axis)
    else:
        idx = np.arange(n) + (-1 if lo_first else 1)
        idx = np.clip(idx, 0, n - 1)
        other = np.take(a, idx, axis=axis)
    return 0.5 * (a + other)


class FluxMonitor:
    """Net Poynting power through a plane (line in 2D) normal to ``axis``.

    flux(lambda) = 1/2 Re sum (E x H*)_axis dA over the plane, with all
    components interpolated to common points on the plane.  ``span`` limits
    the plane to physical ranges along the transverse axes; ``sign`` = -1
    reports power flowing towards negative ``axis``.
    """

    def __init__(self, name: str, wavelengths, axis: int, position: float,
                 span=None, sign: int = 1):
        self.name = name
        self.wavelengths = np.atleast_1d(np.asarray(wavelengths, dtype=float))
        self.axis = axis
        self.position = position
        self.span = span
        self.sign = sign

    def attach(self, sim):
        dom = self.domain = sim.domain
        nd = dom.ndim
        a = self.axis
        u = (self.position - dom.grid.origin[a]) / dom.dx
        ip = int(math.floor(u + 0.5))
        lo, hi = dom.interior_slice(a)
        if not lo <= ip < hi or ip < 1:
            raise MonitorError(f"flux plane {self.name} lies outside the non-PML region")
        self.ip = ip
        b, c = [x for x in _CYCLIC[a][1:]]
        comps = [f"E{_NAMES[b]}", f"E{_NAMES[c]}", f"H{_NAMES[b]}", f"H{_NAMES[c]}"]
        self.comps = [k for k in comps if k in dom.components]
        region = [slice(0, n) for n in dom.shape]
        region[a] = slice(ip - 1, ip + 1)
        self.dft = DftMonitor(self.name + "/dft", self.wavelengths, self.comps, tuple(region))
        self.dft.attach(sim)
        # transverse cell ranges
        self.tslices = []
        for t in range(nd):
            if t == a:
                continue
            n = dom.shape[t]
            if self.span is None or self.span[len(self.tslices)] is None:
                lo_t, hi_t = dom.interior_slice(t)
            else:
                s0, s1 = self.span[len(self.tslices)]
                lo_t = int(math.floor((s0 - dom.grid.origin[t]) / dom.dx + 0.5))
                hi_t = int(math.floor((s1 - dom.grid.origin[t]) / dom.dx + 0.5))
                if lo_t < 0 or hi_t > n or lo_t >= hi_t:
                    raise MonitorError(f"flux plane {self.name} span outside the grid")
            self.tslices.append(slice(lo_t, hi_t))

    def record(self, sim):
        self.dft.record(sim)

    def _target_offsets(self):
        nd = self.domain.ndim
        if nd == 3:
            return {t: 0.5 for t in range(3) if t != self.axis}
        e_comp = next(k for k in self.comps if k[0] == "E")
        off = component_offsets(e_comp, 2)
        return {t: off[t] for t in range(2) if t != self.axis}

    def _on_plane(self, comp, subtract=None):
        """DFT of ``comp`` interpolated to the target points of the plane."""
        dom = self.domain
        a = self.axis
        arr = self.dft.data[comp]  # (n_wl, ...) with axis a of length 2: [ip-1, ip]
        if subtract is not None:
            arr = arr - subtract.dft.data[comp]
        off = component_offsets(comp, dom.ndim)
        if off[a] == 0.0:
            arr = np.take(arr, [1], axis=a + 1)
        else:
            arr = 0.5 * (np.take(arr, [0], axis=a + 1) + np.take(arr, [1], axis=a + 1))
        per = dom.periodic
        for t, target in self._target_offsets().items():
            if off[t] == target:
                continue
            arr = _shift_avg(arr, t + 1, lo_first=(off[t] > target), periodic=bool(per[t]))
        arr = np.squeeze(arr, axis=a + 1)
        return arr[(slice(None),) + tuple(self.tslices)]

    def result(self, subtract: "FluxMonitor | None" = None):
        """Net power per wavelength.

        With ``subtract`` (an identical plane from a reference run) the flux
        of the field difference is returned, e.g. the reflected part of a
        total field.
        """
        nd = self.domain.ndim
        a = self.axis
        b, c = _CYCLIC[a][1:]
        if subtract is not None and subtract.dft.data.keys() != self.dft.data.keys():
            raise MonitorError("reference flux plane has different components")
        get = lambda k: self._on_plane(k, subtract) if k in self.comps else 0.0
        Eb, Ec = get(f"E{_NAMES[b]}"), get(f"E{_NAMES[c]}")
        Hb, Hc = get(f"H{_NAMES[b]}"), get(f"H{_NAMES[c]}")
        S = Eb * np.conj(Hc) - Ec * np.conj(Hb)
        S = np.asarray(S)
        dA = self.domain.dx ** (nd - 1)
        axes = tuple(range(1, S.ndim))
        return self.sign * 0.5 * np.real(S).sum(axis=axes) * dA


def flux_box(name: str, wavelengths, lo, hi) -> list[FluxMonitor]:
    """Outward-flux planes of an axis-aligned box with corners ``lo`` and ``hi``."""
    nd = len(lo)
    planes = []
    for a in range(nd):
        span = [(lo[t], hi[t]) for t in range(nd) if t != a]
        planes.append(FluxMonitor(f"{name}/{_NAMES[a]}-", wavelengths, a, lo[a], span, sign=-1))
        planes.append(FluxMonitor(f"{name}/{_NAMES[a]}+", wavelengths, a, hi[a], span, sign=+1))
    return planes


@dataclass
class FieldRecord:
    """Everything a run produced.

    ``time_series`` holds probe samples, ``dt`` their spacing and
    ``t_start`` the time of each probe's first sample; ``dft_fields`` maps
    monitor names to {"wavelengths", component: complex array}; ``flux``
    maps flux-plane names to real power per wavelength.
    """

    dt: float
    time_series: dict[str, np.ndarray] = field(default_factory=dict)
    t_start: dict[str, float] = field(default_factory=dict)
    dft_fields: dict[str, dict] = field(default_factory=dict)
    flux: dict[str, np.ndarray] = field(default_factory=dict)
    flux_wavelengths: dict[str, np.ndarray] = field(default_factory=dict)
    steps: int = 0
    warnings: list[str] = field(default_factory=list)

    def total_flux(self, prefix: str) -> np.ndarray:
        """Sum of all flux planes whose name starts with ``prefix`` (e.g. a flux box)."""
        keys = sorted(k for k in self.flux if k.startswith(prefix))
        if not keys:
            raise KeyError(prefix)
        total = np.zeros_like(self.flux[keys[0]])
        for k in keys:
            total = total + self.flux[k]
        return total
