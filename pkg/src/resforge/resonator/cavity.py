"""Photonic-crystal cavity resonances from 2D effective-index FDTD runs.

The 3D nanobeam is collapsed in two steps.  The vertical film (device layer
on its stack) gives a slab index that fills every region covered by the
device; uncovered regions take a background index.  Along the beam, the
fin and bare-waveguide sections are further reduced to 1D segment indices
that feed the Bloch band calculation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..analysis.fitting import ResonanceFit, fit_lorentzian
from ..analysis.spectrum import Spectrum
from ..errors import FitError, NoResonanceError
from ..fdtd.domain import SimulationDomain
from ..fdtd.monitors import DftMonitor, TimeProbe
from ..fdtd.solver import Simulation
from ..fdtd.sources import SourceSpec
from ..geometry.devices import PhcCavitySpec
from ..geometry.materials import LayerStack, get_material
from ..geometry.raster import PermittivityGrid, rasterize
from ..modes import TE, TM, slab_dispersion, stacked_slab_index
from .multilayer import BlochBand, bloch_band_1d

#: Lorentzian and ringdown Q must agree to this relative tolerance.
Q_AGREEMENT = 0.2
#: In-band ringdown below this fraction of the pulse amplitude at the probe is numerical noise.
ROUNDOFF_LEVEL = 1e-9


@dataclass(frozen=True)
class EffectiveIndices:
    """Indices of the collapsed 2D and 1D models at one design wavelength."""

    wavelength: float
    slab: float
    background: float
    fin_segment: float
    gap_segment: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def effective_indices(spec: PhcCavitySpec, stack: LayerStack, wavelength: float,
                      core: str = "TiO2", background: float | str = "substrate") -> EffectiveIndices:
    """Collapse a nanobeam on ``stack`` to 2D and 1D indices.

    Parameters
    ----------
    background : float or {"substrate", "cover"}
        Index given to regions without device material in the 2D model.
        The substrate index mimics leakage into the substrate half-space.
    """
    n_core = get_material(core).index(wavelength)
    slab = stacked_slab_index(n_core, spec.waveguide_height, stack, wavelength, TE).n_eff
    if background == "substrate":
        n_bg = stack.top.index(wavelength)
        if n_bg >= slab:
            # a high-index top layer is part of the guiding film; use the layer below it
            n_bg = min(m.index(wavelength) for m, _ in stack.layers)
    elif background == "cover":
        n_bg = stack.cover.index(wavelength)
    else:
        n_bg = float(background)
    # in-plane E is normal to the transverse interfaces: TM slab polarization
    fin = slab_dispersion(slab, n_bg, n_bg, spec.fin_length, wavelength, TM)
    gap = slab_dispersion(slab, n_bg, n_bg, spec.waveguide_width, wavelength, TM)
    return EffectiveIndices(wavelength, slab, n_bg, fin, gap)


def mirror_band(spec: PhcCavitySpec, eff: EffectiveIndices, wl_range, pitch: float | None = None) -> BlochBand:
    """Bloch band of the fin lattice with period ``pitch`` (mirror pitch by default)."""
    p = spec.mirror_pitch if pitch is None else pitch
    return bloch_band_1d((eff.fin_segment, spec.fin_width), (eff.gap_segment, p - spec.fin_width), wl_range)


def select_gap(band: BlochBand, wavelength: float) -> tuple[float, float]:
    """The gap containing ``wavelength``, else the widest gap of ``band``.

    Raises
    ------
    NoResonanceError
        If the lattice has no gap in the scanned range.
    """
    if not band.gaps:
        raise NoResonanceError("the mirror lattice has no band gap in the scanned range")
    hit = band.gap_containing(wavelength)
    if hit is not None:
        return hit
    return max(band.gaps, key=lambda g: g[1] - g[0])


def phc_scene(spec: PhcCavitySpec, eff: EffectiveIndices, dx: float, padding: float = 1.0,
              pml_cells: int = 12) -> PermittivityGrid:
    """Top-view permittivity of the collapsed cavity; the beam runs into the PML."""
    margin = padding + pml_cells * dx
    stack = LayerStack([])
    return rasterize(spec, stack, dx, padding=margin, view="top",
                     core_index=eff.slab, background_index=eff.background)


# ---------------------------------------------------------------- spectral analysis

@dataclass
class RingdownFit:
    """Exponential envelope fit of a band-limited ringdown."""

    tau: float
    r_squared: float
    frequency: float

    @property
    def q(self) -> float:
        return math.pi * self.frequency * self.tau


def _band_limited(samples, dt, f_lo, f_hi):
    """Analytic signal restricted to [f_lo, f_hi] (one-sided FFT filter).

    The passband is flat over its inner half and rolls off as cos^2 over
    the outer half; a brickwall mask would leak 1/t sinc tails from an
    abrupt record start that swamp a decaying envelope.
    """
    n = len(samples)
    spec = np.fft.fft(samples)
    f = np.fft.fftfreq(n, dt)
    centre, half = 0.5 * (f_lo + f_hi), 0.5 * (f_hi - f_lo)
    dist = np.abs(f - centre)
    ramp = np.clip((dist - 0.5 * half) / (0.5 * half), 0.0, 1.0)
    weight = np.where(dist <= half, np.cos(0.5 * np.pi * ramp) ** 2, 0.0)
    return np.fft.ifft(2.0 * spec * weight)


def _ringdown_half_band(f0, f_lo, f_hi, record_time):
    """Widest band around ``f0`` that stays inside the search band.

    The filter's impulse response lasts about 1/half_band; it has to be
    short against the decay time or leakage from the record start slows
    the apparent decay.
    """
    return max(min(f0 - f_lo, f_hi - f0), 4.0 / record_time)


def fit_ringdown(samples, dt: float, frequency: float, half_band: float,
                 skip_fraction: float = 0.1) -> RingdownFit:
    """Log-linear fit of the envelope of the component near ``frequency``.

    The first and last ``skip_fraction`` of the record are excluded, where
    the FFT filter's edge effects live.
    """
    z = _band_limited(np.asarray(samples, dtype=float), dt, frequency - half_band, frequency + half_band)
    env = np.abs(z)
    n = len(env)
    a, b = int(skip_fraction * n), int((1 - skip_fraction) * n)
    t = np.arange(n) * dt
    y = np.log(np.maximum(env[a:b], 1e-300))
    slope, icpt = np.polyfit(t[a:b], y, 1)
    resid = y - (slope * t[a:b] + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 0.0
    tau = math.inf if slope >= 0 else -1.0 / slope
    return RingdownFit(tau, r2, frequency)


def padded_power_spectrum(samples, dt: float, pad_factor: int = 8):
    """(frequencies, power) of the zero-padded FFT, positive frequencies only."""
    x = np.asarray(samples, dtype=float)
    n = len(x) * pad_factor
    X = np.fft.rfft(x, n)
    f = np.fft.rfftfreq(n, dt)
    return f, np.abs(X) ** 2 * dt * dt


def spectrum_in_band(f, power, wl_band) -> Spectrum:
    lo, hi = wl_band
    m = (f > 1.0 / hi) & (f < 1.0 / lo)
    wl = 1.0 / f[m]
    return Spectrum(wl[::-1], power[m][::-1])


@dataclass
class CavityResult:
    """Resonance of a cavity scene.

    ``q`` is the Lorentzian-fit value; ``q_ringdown`` comes from the
    exponential envelope.  ``flagged`` is set when they differ by more than
    20 %.  ``field_snapshot`` holds the DFT fields at the resonance when a
    snapshot run was requested.
    """

    wavelength: float
    q: float
    q_ringdown: float
    ringdown_r_squared: float
    fit: ResonanceFit
    flagged: bool
    spectrum: Spectrum
    steps: int
    record_time: float
    mode_volume: float | None = None
    field_snapshot: dict | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "wavelength_um": self.wavelength,
            "wavelength_nm": self.wavelength * 1e3,
            "q": self.q,
            "q_ringdown": self.q_ringdown,
            "ringdown_r_squared": self.ringdown_r_squared,
            "flagged": self.flagged,
            "mode_volume": self.mode_volume,
            "steps": self.steps,
            "record_time": self.record_time,
            "fit": self.fit.to_dict(),
            "notes": list(self.notes),
        }


def _default_points(domain):
    """Source and probe near the centre but off every symmetry plane."""
    g = domain.grid
    c = [o + 0.5 * s for o, s in zip(g.origin, g.size)]
    src = tuple(ci + k * g.dx for ci, k in zip(c, (3.3, 1.7, 0.9)[: g.ndim]))
    probe = tuple(ci + k * g.dx for ci, k in zip(c, (-5.6, 2.3, 1.4)[: g.ndim]))
    return src, probe


def cavity_resonance(domain: SimulationDomain, wl_band, source_point=None, probe_point=None,
                     component: str | None = None, settle_time: float | None = None,
                     decays: float = 4.0, chunk_steps: int = 4000, max_steps: int = 2_000_000,
                     min_record_steps: int = 8000, snapshot: bool = False, workers: int | None = None,
                     pad_factor: int = 8) -> CavityResult:
    """Excite a cavity with a broadband pulse and extract its resonance.

    The probe records the field after the pulse has ended and an extra
    ``settle_time`` has passed.  Recording continues in chunks until it
    spans ``decays`` field decay times of the dominant in-band mode (or
    ``max_steps``).  Truncating the record modulates the spectral line by
    about 2 exp(-decays), which biases the Lorentzian width; 4 decay times
    keep that under 4 %.  The resonance wavelength is the peak of the 8x
    zero-padded power spectrum, Q comes from a Lorentzian fit around it and
    is cross-checked against the envelope decay, Q = pi tau c / lambda0.

    With ``snapshot`` a second, identical run accumulates the DFT of every
    field component at the resonance during the ringdown.

    Raises
    ------
    NoResonanceError
        If the spectrum has no peak inside ``wl_band`` or the signal does
        not decay like a resonance.
    """
    lo, hi = wl_band
    if not 0 < lo < hi:
        raise ValueError("wl_band must be an increasing pair of positive wavelengths")
    f_lo, f_hi = 1.0 / hi, 1.0 / lo
    f0 = 0.5 * (f_lo + f_hi)
    bw = 1.2 * (f_hi - f_lo) / f0
    comp = component or ("Ey" if domain.mode == "TE" else next(c for c in domain.components if c[0] == "E"))
    sp, pp = _default_points(domain)
    source_point = source_point or sp
    probe_point = probe_point or pp
    src = SourceSpec(kind="dipole_soft", wavelength=1.0 / f0, fractional_bandwidth=bw,
                     position=source_point, component=comp)
    if settle_time is None:
        settle_time = 100.0 / f_lo
    start_step = int(math.ceil((src.end_time + settle_time) / domain.dt))

    sim = Simulation(domain, [src], workers=workers)
    notes: list[str] = []
    try:
        probe = TimeProbe("ringdown", comp, point=probe_point)
        sim.add_monitor(probe)
        sim.run(start_step)
        n0 = len(probe.result())
        # reference level: the probe amplitude while the pulse passes
        pulse_peak = float(np.max(np.abs(probe.result()))) if n0 else 0.0
        rd = None
        f_peak = None
        while True:
            sim.run(chunk_steps)
            x = probe.result()[n0:]
            if len(x) < min_record_steps:
                continue
            env = np.abs(_band_limited(x, domain.dt, f_lo, f_hi))
            if env.max() <= ROUNDOFF_LEVEL * pulse_peak:
                raise NoResonanceError("nothing rings in the band once the pulse has passed")
            f, p = padded_power_spectrum(x, domain.dt, pad_factor)
            band = (f > f_lo) & (f < f_hi)
            if not np.any(band) or p[band].max() <= 0:
                raise NoResonanceError("no spectral power inside the search band")
            f_peak = float(f[band][np.argmax(p[band])])
            half = _ringdown_half_band(f_peak, f_lo, f_hi, len(x) * domain.dt)
            rd = fit_ringdown(x, domain.dt, f_peak, half)
            record_time = len(x) * domain.dt
            if not math.isfinite(rd.tau):
                if len(x) >= max_steps:
                    raise NoResonanceError("in-band signal does not decay like a resonance")
                continue
            if record_time >= decays * rd.tau or len(x) >= max_steps:
                if record_time < decays * rd.tau:
                    notes.append(f"record spans only {record_time / rd.tau:.2f} decay times")
                break
        steps = sim.step_count
    finally:
        sim.close()

    x = probe.result()[n0:]
    f, p = padded_power_spectrum(x, domain.dt, pad_factor)
    spectrum = spectrum_in_band(f, p, wl_band)
    wl0_guess = 1.0 / f_peak
    fwhm_guess = wl0_guess / max(rd.q, 1.0)
    bin_wl = wl0_guess ** 2 / (pad_factor * len(x) * domain.dt)
    half_win = max(6 * fwhm_guess, 16 * bin_wl)
    win = (max(lo, wl0_guess - half_win), min(hi, wl0_guess + half_win))
    try:
        fit = fit_lorentzian(spectrum, win, "peak")
    except NoResonanceError as exc:
        raise NoResonanceError(f"no resonance inside the band: {exc}") from exc
    except FitError as exc:
        if rd.r_squared < 0.5 or rd.q < 1.0:
            raise NoResonanceError(f"no isolated resonance inside the band near {wl0_guess * 1e3:.2f} nm") from exc
        raise FitError(f"resonance near {wl0_guess * 1e3:.2f} nm: {exc}") from exc
    rd = fit_ringdown(x, domain.dt, 1.0 / fit.wavelength,
                      _ringdown_half_band(1.0 / fit.wavelength, f_lo, f_hi, len(x) * domain.dt))
    q_rd = math.pi * rd.tau / fit.wavelength
    flagged = abs(fit.q - q_rd) > Q_AGREEMENT * q_rd
    if flagged:
        notes.append(f"Lorentzian Q {fit.q:.0f} and ringdown Q {q_rd:.0f} differ by more than 20%")
    result = CavityResult(
        wavelength=fit.wavelength, q=fit.q, q_ringdown=q_rd, ringdown_r_squared=rd.r_squared,
        fit=fit, flagged=flagged, spectrum=spectrum, steps=steps, record_time=len(x) * domain.dt,
        notes=notes,
    )
    if snapshot:
        result.field_snapshot = resonance_snapshot(domain, src, fit.wavelength, start_step,
                                                   len(x), workers)
    return result


def resonance_snapshot(domain: SimulationDomain, source: SourceSpec, wavelength: float,
                       start_step: int, record_steps: int, workers: int | None = None) -> dict:
    """DFT of all field components at ``wavelength`` over the ringdown window."""
    sim = Simulation(domain, [source], workers=workers)
    try:
        sim.run(start_step)
        mon = DftMonitor("snapshot", [wavelength])
        sim.add_monitor(mon)
        sim.run(record_steps)
    finally:
        sim.close()
    data = mon.result()
    return {k: (v[0] if k != "wavelengths" else v) for k, v in data.items()}
