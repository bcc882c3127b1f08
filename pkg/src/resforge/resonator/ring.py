"""Add-drop ring response, free spectral range, Q budgets and coupler calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..analysis.spectrum import Spectrum
from ..errors import FitError


@dataclass
class RingModel:
    """Traveling-wave add-drop ring.

    Parameters
    ----------
    t1, t2 : float
        Self-coupling amplitudes of the input and drop couplers.
    a : float
        Single-pass amplitude transmission (1 = lossless).
    length : float
        Circumference (um).
    n_eff : float or callable
        Effective index, optionally a function of wavelength (um).
    n_g : float, optional
        Group index, informational (used for FSR estimates).
    """

    t1: float
    t2: float
    a: float
    length: float
    n_eff: float | Callable[[np.ndarray], np.ndarray]
    n_g: float | None = None

    def __post_init__(self):
        for name in ("t1", "t2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.a <= 1.0:
            raise ValueError("round-trip amplitude must lie in (0, 1]")
        if not self.length > 0:
            raise ValueError("circumference must be > 0")

    @classmethod
    def from_radius(cls, radius, **kw) -> "RingModel":
        return cls(length=2 * math.pi * radius, **kw)

    @property
    def kappa1(self) -> float:
        return math.sqrt(1.0 - self.t1 ** 2)

    @property
    def kappa2(self) -> float:
        return math.sqrt(1.0 - self.t2 ** 2)

    def phase(self, wavelengths) -> np.ndarray:
        wl = np.asarray(wavelengths, dtype=float)
        n = self.n_eff(wl) if callable(self.n_eff) else self.n_eff
        return 2 * math.pi * n * self.length / wl

    def powers(self, wavelengths):
        """(through, drop) power transmission at each wavelength."""
        phi = self.phase(wavelengths)
        t1, t2, a = self.t1, self.t2, self.a
        drop = ((1 - t1 ** 2) * (1 - t2 ** 2) * a) / ((1 - t1 * t2 * a) ** 2 + 4 * t1 * t2 * a * np.sin(phi / 2) ** 2)
        cos = np.cos(phi)
        through = ((t2 * a) ** 2 - 2 * t1 * t2 * a * cos + t1 ** 2) / (1 - 2 * t1 * t2 * a * cos + (t1 * t2 * a) ** 2)
        return through, drop


def ring_spectra(model: RingModel, wavelengths) -> tuple[Spectrum, Spectrum]:
    through, drop = model.powers(wavelengths)
    wl = np.asarray(wavelengths, dtype=float)
    return Spectrum(wl, np.clip(through, 0, None)), Spectrum(wl, np.clip(drop, 0, None))


def fsr(wavelength: float, n_g: float, radius: float) -> float:
    """Free spectral range (um) of a circular ring."""
    if min(wavelength, n_g, radius) <= 0:
        raise ValueError("fsr inputs must be > 0")
    return wavelength ** 2 / (n_g * 2 * math.pi * radius)


def q_compose(*qs: float) -> float:
    """Loaded Q from independent loss channels: 1/Q = sum 1/Q_i (inf = absent)."""
    if not qs:
        raise ValueError("need at least one Q")
    inv = 0.0
    for q in qs:
        if not q > 0:
            raise ValueError("quality factors must be > 0")
        inv += 1.0 / q
    return math.inf if inv == 0 else 1.0 / inv


@dataclass
class CouplingFit:
    """kappa(gap) = kappa0 exp(-gap / decay_length)."""

    kappa0: float
    decay_length: float
    r_squared: float

    def kappa(self, gap):
        return self.kappa0 * np.exp(-np.asarray(gap, dtype=float) / self.decay_length)

    def to_dict(self) -> dict:
        return {"kappa0": self.kappa0, "decay_length": self.decay_length, "r_squared": self.r_squared}


def calibrate_coupling(gaps, kappas, min_r_squared: float = 0.9) -> CouplingFit:
    """Least-squares fit of ln(kappa) against gap.

    ``kappas`` are cross-coupling amplitudes (use the square root of coupled
    power when that is what was measured).
    """
    g = np.asarray(gaps, dtype=float)
    k = np.asarray(kappas, dtype=float)
    if len(g) < 3 or len(g) != len(k):
        raise FitError("need at least three (gap, kappa) samples")
    if np.any(k <= 0):
        raise FitError("coupling values must be > 0")
    y = np.log(k)
    slope, icpt = np.polyfit(g, y, 1)
    resid = y - (slope * g + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 0.0
    if slope >= 0 or r2 < min_r_squared:
        raise FitError(f"coupling data are not an exponential decay with gap (R^2 = {r2:.3f})")
    return CouplingFit(float(math.exp(icpt)), float(-1.0 / slope), r2)
