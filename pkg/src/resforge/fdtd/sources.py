"""Source definitions and waveforms.

All sources are soft: they add a current term to an E component on top of
the regular update, so outgoing waves pass through them unperturbed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import GeometryError

_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass
class SourceSpec:
    """A pulsed or continuous-wave soft source.

    Parameters
    ----------
    kind : {"dipole_soft", "plane_wave", "mode_injection"}
        Point source, uniform plane/line source spanning the interior, or a
        plane source with a user-supplied transverse ``profile``.
    wavelength : float
        Centre wavelength (um).
    fractional_bandwidth : float
        FWHM of the amplitude spectrum divided by the centre frequency.
    position : tuple of float
        Physical location.  For plane sources only the coordinate along
        ``axis`` matters.
    component : str
        E component driven (e.g. "Ez", "Ey").
    waveform : {"gaussian", "cw"}
        Gaussian-modulated sinusoid, or a sinusoid switched on with a
        smooth ramp of ``ramp_cycles`` periods.
    """

    kind: str = "dipole_soft"
    wavelength: float = 0.737
    fractional_bandwidth: float = 0.15
    position: tuple[float, ...] = (0.0, 0.0)
    component: str = "Ey"
    amplitude: float = 1.0
    axis: int = 0
    waveform: str = "gaussian"
    profile: np.ndarray | None = None
    delay_sigmas: float = 6.0
    ramp_cycles: float = 5.0

    def __post_init__(self):
        if self.kind not in ("dipole_soft", "plane_wave", "mode_injection"):
            raise GeometryError(f"unknown source kind {self.kind!r}")
        if self.waveform not in ("gaussian", "cw"):
            raise GeometryError(f"unknown waveform {self.waveform!r}")
        if self.waveform == "gaussian" and not self.fractional_bandwidth > 0:
            raise GeometryError("pulse bandwidth must be > 0")
        if self.kind == "mode_injection" and self.profile is None:
            raise GeometryError("mode_injection needs a transverse profile")
        if not self.wavelength > 0:
            raise GeometryError("wavelength must be > 0")

    @property
    def frequency(self) -> float:
        return 1.0 / self.wavelength

    @property
    def sigma_t(self) -> float:
        sigma_f = self.fractional_bandwidth * self.frequency * _FWHM_TO_SIGMA
        return 1.0 / (2.0 * math.pi * sigma_f)

    @property
    def t0(self) -> float:
        return self.delay_sigmas * self.sigma_t

    @property
    def end_time(self) -> float:
        """Time after which the pulse is negligible; infinite for CW."""
        if self.waveform == "cw":
            return math.inf
        return 2.0 * self.t0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        w = 2.0 * math.pi * self.frequency
        if self.waveform == "cw":
            ramp_t = self.ramp_cycles / self.frequency
            env = np.where(t < ramp_t, np.sin(0.5 * math.pi * np.clip(t / ramp_t, 0, 1)) ** 2, 1.0)
            return self.amplitude * env * np.sin(w * t)
        s = (t - self.t0) / self.sigma_t
        return self.amplitude * np.exp(-0.5 * s * s) * np.sin(w * (t - self.t0))

    def spectrum(self, wavelengths, dt: float, n_steps: int | None = None) -> np.ndarray:
        """Discrete-time Fourier transform of the sampled waveform at the update times."""
        n = n_steps or int(math.ceil(self.end_time / dt)) + 1
        t = (np.arange(n) + 0.5) * dt
        f = self(t)
        omega = 2 * math.pi / np.asarray(wavelengths, dtype=float)
        return (np.exp(1j * np.outer(omega, t)) @ f) * dt


def gaussian_pulse(wavelength, fractional_bandwidth=0.15, **kw) -> SourceSpec:
    return SourceSpec(wavelength=wavelength, fractional_bandwidth=fractional_bandwidth, **kw)
