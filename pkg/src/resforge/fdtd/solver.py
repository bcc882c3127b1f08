"""Leapfrog time stepping, runs and ringdown probes."""

from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import InstabilityError, MonitorError
from . import kernels
from .domain import SimulationDomain
from .monitors import FieldRecord, FluxMonitor, TimeProbe
from .sources import SourceSpec

log = logging.getLogger(__name__)

#: Fields exceeding this multiple of the largest source amplitude count as divergent.
BLOWUP_FACTOR = 1e6


def default_workers() -> int:
    env = os.environ.get("RESFORGE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _tiles(n, workers):
    workers = max(1, min(workers, n))
    edges = np.linspace(0, n, workers + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


class Simulation:
    """Mutable FDTD state plus the sources and monitors attached to it.

    The update order within :meth:`step` is: E from H (with source currents
    injected at the half step), then H from the new E.  After ``n`` steps
    E lives at t = n dt and H at t = (n + 1/2) dt.

    Parameters
    ----------
    domain : SimulationDomain
    sources : sequence of SourceSpec
    monitors : sequence of TimeProbe, DftMonitor or FluxMonitor
    workers : int, optional
        Number of tiles/threads along axis 0.  Results do not depend on it.
    check_every : int
        Steps between divergence checks.
    """

    def __init__(self, domain: SimulationDomain, sources=(), monitors=(), workers=None,
                 check_every: int = 64):
        self.domain = domain
        self.step_count = 0
        self.check_every = check_every
        self.workers = workers or default_workers()
        self.warnings: list[str] = []
        shape = domain.shape
        self.fields = {c: np.zeros(shape) for c in domain.components}
        dt = domain.dt
        self._ce = {c: dt / domain.component_eps(c) for c in domain.components if c[0] == "E"}
        nd = domain.ndim
        self._coef_e = [domain.cpml_coefficients(a, half=False) for a in range(nd)]
        self._coef_h = [domain.cpml_coefficients(a, half=True) for a in range(nd)]
        if nd == 2:
            self.psi = {k: np.zeros(shape) for k in ("e_x", "e_y", "h_x", "h_y")}
        else:
            self.psi = {"e": np.zeros((6,) + shape), "h": np.zeros((6,) + shape)}
            n_max = max(shape)
            self._stack_e = [self._stack3(self._coef_e, q, n_max) for q in range(3)]
            self._stack_h = [self._stack3(self._coef_h, q, n_max) for q in range(3)]
        self._tiles = _tiles(shape[0], self.workers)
        self._pool = ThreadPoolExecutor(len(self._tiles)) if len(self._tiles) > 1 else None
        self.sources: list = []
        self.monitors: list = []
        self.ref_amplitude = 1.0
        for s in sources:
            self.add_source(s)
        for m in monitors:
            self.add_monitor(m)
        self.track_energy = False
        self._h_prev = None

    @staticmethod
    def _stack3(coefs, q, n_max):
        # pad (1/kappa, b) with ones and c with zeros beyond each axis length
        out = np.full((3, n_max), 0.0 if q == 2 else 1.0)
        for a in range(3):
            v = coefs[a][q]
            out[a, : len(v)] = v
        return out

    # ------------------------------------------------------------------ setup

    def warn(self, msg):
        self.warnings.append(msg)
        warnings.warn(msg, stacklevel=3)

    def add_source(self, src: SourceSpec):
        dom = self.domain
        if src.component not in dom.components or src.component[0] != "E":
            raise MonitorError(f"source component {src.component} not an E component of mode {dom.mode}")
        if src.kind == "dipole_soft":
            idx = dom.index_of(src.position, src.component)
            if not dom.in_interior(idx):
                raise MonitorError("source lies inside the PML")
            target = (idx, self._ce[src.component][idx])
        else:
            a = src.axis
            i = dom.index_of(src.position, src.component)[a]
            lo, hi = dom.interior_slice(a)
            if not lo <= i < hi:
                raise MonitorError("source plane lies inside the PML")
            region = [slice(*dom.interior_slice(t)) for t in range(dom.ndim)]
            region[a] = i
            region = tuple(region)
            weight = self._ce[src.component][region].copy()
            if src.profile is not None:
                prof = np.asarray(src.profile, dtype=float)
                if prof.shape != weight.shape:
                    raise MonitorError(f"mode profile shape {prof.shape} does not match plane {weight.shape}")
                weight = weight * prof
            target = (region, weight)
        self.sources.append((src, target))
        self.ref_amplitude = max(abs(s.amplitude) for s, _ in self.sources)

    def add_monitor(self, mon):
        mon.attach(self)
        self.monitors.append(mon)

    # ------------------------------------------------------------------ timing

    @property
    def time(self) -> float:
        return self.step_count * self.domain.dt

    @property
    def time_e(self) -> float:
        return self.step_count * self.domain.dt

    @property
    def time_h(self) -> float:
        return (self.step_count + 0.5) * self.domain.dt

    # ------------------------------------------------------------------ stepping

    def _run_tiles(self, fn, *args):
        if self._pool is None:
            fn(*args, 0, self.domain.shape[0])
            return
        futures = [self._pool.submit(fn, *args, i0, i1) for i0, i1 in self._tiles]
        for f in futures:
            f.result()

    def _update_e(self):
        dom = self.domain
        F, P = self.fields, self.psi
        inv_dx = 1.0 / dom.dx
        per = dom.periodic
        if dom.mode == "TM":
            (kx, bx, cx), (ky, by, cy) = self._coef_e
            self._run_tiles(kernels.tm_update_e, F["Ez"], F["Hx"], F["Hy"], self._ce["Ez"],
                            P["e_x"], P["e_y"], kx, bx, cx, ky, by, cy,
                            inv_dx, bool(per[0]), bool(per[1]))
        elif dom.mode == "TE":
            (kx, bx, cx), (ky, by, cy) = self._coef_e
            self._run_tiles(kernels.te_update_e, F["Ex"], F["Ey"], F["Hz"], self._ce["Ex"], self._ce["Ey"],
                            P["e_y"], P["e_x"], kx, bx, cx, ky, by, cy,
                            inv_dx, bool(per[0]), bool(per[1]))
        else:
            ik, b, c = self._stack_e
            self._run_tiles(kernels.e3_update, F["Ex"], F["Ey"], F["Ez"], F["Hx"], F["Hy"], F["Hz"],
                            self._ce["Ex"], self._ce["Ey"], self._ce["Ez"], P["e"], ik, b, c,
                            inv_dx, per)

    def _update_h(self):
        dom = self.domain
        F, P = self.fields, self.psi
        inv_dx = 1.0 / dom.dx
        dt = dom.dt
        per = dom.periodic
        if dom.mode == "TM":
            (kx, bx, cx), (ky, by, cy) = self._coef_h
            self._run_tiles(kernels.tm_update_h, F["Ez"], F["Hx"], F["Hy"], P["h_x"], P["h_y"],
                            kx, bx, cx, ky, by, cy, dt, inv_dx, bool(per[0]), bool(per[1]))
        elif dom.mode == "TE":
            (kx, bx, cx), (ky, by, cy) = self._coef_h
            self._run_tiles(kernels.te_update_h, F["Ex"], F["Ey"], F["Hz"], P["h_x"], P["h_y"],
                            kx, bx, cx, ky, by, cy, dt, inv_dx, bool(per[0]), bool(per[1]))
        else:
            ik, b, c = self._stack_h
            self._run_tiles(kernels.h3_update, F["Ex"], F["Ey"], F["Ez"], F["Hx"], F["Hy"], F["Hz"],
                            P["h"], ik, b, c, dt, inv_dx, per)

    def _inject(self):
        t = (self.step_count + 0.5) * self.domain.dt
        for src, (where, weight) in self.sources:
            if t > src.end_time:
                continue
            self.fields[src.component][where] += weight * float(src(t))

    def step(self):
        """Advance E then H by one time step."""
        self._update_e()
        self._inject()
        if self.track_energy:
            self._h_prev = {c: f.copy() for c, f in self.fields.items() if c[0] == "H"}
        self._update_h()
        self.step_count += 1
        for m in self.monitors:
            m.record(self)
        if self.step_count % self.check_every == 0:
            self.check_stability()

    def check_stability(self):
        limit = BLOWUP_FACTOR * self.ref_amplitude
        for c, f in self.fields.items():
            m = float(np.max(np.abs(f)))
            if not math.isfinite(m) or m > limit:
                raise InstabilityError(
                    f"{c} reached {m:.3g} after {self.step_count} steps "
                    f"(limit {limit:.3g}); check the Courant factor {self.domain.courant_factor}"
                )

    def run(self, steps: int | None = None, until: float | None = None) -> "Simulation":
        if steps is None:
            if until is None:
                raise ValueError("give steps or until")
            steps = max(0, int(math.ceil(until / self.domain.dt - 1e-9)) - self.step_count)
        for _ in range(steps):
            self.step()
        return self

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    # ------------------------------------------------------------------ diagnostics

    def energy(self) -> float:
        """Discrete electromagnetic energy conserved exactly by the lossless Yee scheme.

        W = 1/2 sum eps E^n.E^n + 1/2 sum H^(n-1/2).H^(n+1/2), which requires
        ``track_energy`` to have been set before the last step.
        """
        if self._h_prev is None:
            raise RuntimeError("set track_energy = True and take a step first")
        dom = self.domain
        dV = dom.dx ** dom.ndim
        w = 0.0
        for c, f in self.fields.items():
            if c[0] == "E":
                w += 0.5 * float(np.sum(dom.component_eps(c) * f * f))
            else:
                w += 0.5 * float(np.sum(self._h_prev[c] * f))
        return w * dV

    def record(self) -> FieldRecord:
        rec = FieldRecord(dt=self.domain.dt, steps=self.step_count, warnings=list(self.warnings))
        for m in self.monitors:
            if isinstance(m, TimeProbe):
                rec.time_series[m.name] = m.result()
                off = 0.0 if m.component[0] == "E" else 0.5
                rec.t_start[m.name] = (m.start_step + 1 + off) * self.domain.dt
            elif isinstance(m, FluxMonitor):
                rec.flux[m.name] = m.result()
                rec.flux_wavelengths[m.name] = m.wavelengths
            else:
                rec.dft_fields[m.name] = m.result()
        return rec


def step(domain_or_sim, state=None):
    """Functional form of one time step: returns the advanced Simulation."""
    sim = domain_or_sim if isinstance(domain_or_sim, Simulation) else Simulation(domain_or_sim)
    if state is not None:
        for c, f in state.items():
            sim.fields[c][...] = f
    sim.step()
    return sim


def run(domain: SimulationDomain, sources, monitors, steps: int | None = None,
        until: float | None = None, workers: int | None = None) -> FieldRecord:
    """Run a simulation from zero fields and return its FieldRecord.

    When neither ``steps`` nor ``until`` is given the run lasts until the
    latest pulse has ended plus the time light needs to cross the domain
    four times.
    """
    sim = Simulation(domain, sources, monitors, workers=workers)
    if steps is None and until is None:
        src_end = max((s.end_time for s in sources), default=0.0)
        if not math.isfinite(src_end):
            raise ValueError("CW sources need an explicit duration")
        n = domain.grid.n_max()
        until = src_end + 4 * n * max(domain.grid.size)
    try:
        sim.run(steps, until)
        return sim.record()
    finally:
        sim.close()


def ringdown_probe(domain: SimulationDomain, sources, probe_point, settle_steps: int,
                   record_steps: int, component: str | None = None, workers: int | None = None,
                   extra_monitors=()):
    """Field at ``probe_point`` after every source has switched off.

    Returns ``(samples, dt, t_start, record)``: only post-source samples are
    returned, starting ``settle_steps`` steps after the last source ends.
    """
    if settle_steps < 0:
        raise ValueError("settle_steps must be >= 0")
    src_end = max(s.end_time for s in sources)
    if not math.isfinite(src_end):
        raise ValueError("ringdown needs pulsed sources")
    comp = component or next(c for c in domain.components if c[0] == "E")
    sim = Simulation(domain, sources, extra_monitors, workers=workers)
    try:
        off_step = int(math.ceil(src_end / domain.dt))
        sim.run(off_step + settle_steps)
        probe = TimeProbe("ringdown", comp, point=probe_point)
        sim.add_monitor(probe)
        sim.run(record_steps)
        rec = sim.record()
        return rec.time_series["ringdown"], domain.dt, rec.t_start["ringdown"], rec
    finally:
        sim.close()
