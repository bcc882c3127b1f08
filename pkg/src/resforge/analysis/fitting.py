"""Lorentzian resonance fitting by damped Gauss-Newton (Levenberg-Marquardt)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import find_peaks

from ..errors import FitError, NoResonanceError
from .spectrum import Spectrum

#: Scale from median absolute deviation to standard deviation for Gaussian noise.
MAD_SCALE = 1.4826
MIN_SAMPLES = 8


@dataclass
class ResonanceFit:
    """Parameters of ``B + A (G/2)^2 / ((wl - wl0)^2 + (G/2)^2)``.

    ``amplitude`` is negative for dips.  ``lower_bound`` is set when the
    linewidth spans fewer than two samples, in which case ``q`` only bounds
    the true value from below.
    """

    wavelength: float
    fwhm: float
    q: float
    amplitude: float
    baseline: float
    rms_residual: float
    lower_bound: bool = False
    orientation: str = "peak"
    iterations: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wavelength_nm"] = self.wavelength * 1e3
        d["fwhm_nm"] = self.fwhm * 1e3
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ResonanceFit":
        keys = cls.__dataclass_fields__
        return cls(**{k: v for k, v in d.items() if k in keys})


def lorentzian(wl, wl0, fwhm, amplitude, baseline):
    h2 = (0.5 * fwhm) ** 2
    return baseline + amplitude * h2 / ((np.asarray(wl) - wl0) ** 2 + h2)


def noise_floor(y: np.ndarray) -> float:
    """Robust noise estimate from the scatter of first differences.

    Differencing removes slow trends; the MAD of the differences is divided
    by sqrt(2) because each difference carries two independent samples.
    """
    d = np.diff(y)
    if len(d) == 0:
        return 0.0
    return MAD_SCALE * float(np.median(np.abs(d - np.median(d)))) / math.sqrt(2.0)


def _half_width(x, s, idx, level):
    n = len(s)
    i = idx
    while i > 0 and s[i] > level:
        i -= 1
    if s[i] > level:
        left = x[0]
    else:
        left = x[i] + (level - s[i]) * (x[i + 1] - x[i]) / (s[i + 1] - s[i])
    i = idx
    while i < n - 1 and s[i] > level:
        i += 1
    if s[i] > level:
        right = x[-1]
    else:
        right = x[i - 1] + (s[i - 1] - level) * (x[i] - x[i - 1]) / (s[i - 1] - s[i])
    return right - left


def _model_jac(x, p):
    x0, g, a, b = p
    h = 0.5 * g
    dx = x - x0
    den = dx * dx + h * h
    f = h * h / den
    J = np.empty((len(x), 4))
    J[:, 0] = a * h * h * 2.0 * dx / den ** 2
    J[:, 1] = a * h * dx * dx / den ** 2
    J[:, 2] = f
    J[:, 3] = 1.0
    return b + a * f, J


def _levenberg_marquardt(x, y, p, tol=1e-8, max_iter=500):
    model, J = _model_jac(x, p)
    r = y - model
    cost = float(r @ r)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        JtJ = J.T @ J
        g = J.T @ r
        while True:
            A = JtJ + lam * np.diag(np.diag(JtJ) + 1e-300)
            try:
                step = np.linalg.solve(A, g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(A, g, rcond=None)[0]
            trial = p + step
            if trial[1] <= 0:
                lam *= 10.0
            else:
                m2, J2 = _model_jac(x, trial)
                r2 = y - m2
                c2 = float(r2 @ r2)
                if c2 <= cost:
                    break
                lam *= 10.0
            if lam > 1e16:
                # no downhill step exists at working precision: we sit at the minimum
                return p, cost, it
        typ = np.array([abs(p[1]), abs(p[1]), abs(p[2]), abs(p[2])])
        small = np.all(np.abs(step) <= tol * np.maximum(np.abs(p), typ))
        p, J, r, cost = trial, J2, r2, c2
        lam = max(lam / 10.0, 1e-12)
        if small:
            return p, cost, it
    raise FitError(f"Lorentzian fit did not converge within {max_iter} iterations")


def fit_lorentzian(spectrum: Spectrum, window=None, orientation: str = "peak") -> ResonanceFit:
    """Fit a single Lorentzian peak or dip.

    Parameters
    ----------
    spectrum : Spectrum
    window : (float, float), optional
        Wavelength range in um; the whole spectrum when omitted.
    orientation : {"peak", "dip"}

    Raises
    ------
    NoResonanceError
        If no extremum rises more than three noise floors above the baseline.
    FitError
        If several comparable extrema share the window or the iteration fails.
    """
    if orientation not in ("peak", "dip"):
        raise ValueError("orientation must be 'peak' or 'dip'")
    sp = spectrum.window(*window) if window is not None else spectrum
    n = len(sp)
    if n < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} samples in the window, got {n}")
    wl, y_raw = sp.wavelengths, sp.intensity
    # normalized coordinates keep the iteration scale-free
    center = 0.5 * (wl[0] + wl[-1])
    half = 0.5 * (wl[-1] - wl[0])
    x = (wl - center) / half
    y_scale = float(np.max(np.abs(y_raw))) or 1.0
    y = y_raw / y_scale
    sign = 1.0 if orientation == "peak" else -1.0

    k = max(2, n // 10)
    base = float(np.median(np.concatenate([y[:k], y[-k:]])))
    s = sign * (y - base)
    idx = int(np.argmax(s))
    height = float(s[idx])
    noise = noise_floor(y)
    if not height > max(3.0 * noise, 1e-12):
        raise NoResonanceError("no extremum above three times the noise floor")
    peaks, _ = find_peaks(s, height=3.0 * noise, prominence=0.5 * height)
    if len(peaks) > 1:
        raise FitError(f"{len(peaks)} comparable extrema in the fit window")
    g0 = max(_half_width(x, s, idx, 0.5 * height), float(np.min(np.diff(x))))
    p0 = np.array([x[idx], g0, sign * height, base])
    p, cost, iters = _levenberg_marquardt(x, y, p0)
    x0, g, a, b = p
    wl0 = center + x0 * half
    if not wl[0] <= wl0 <= wl[-1]:
        raise FitError("fitted centre left the window")
    fwhm = abs(g) * half
    rms = math.sqrt(cost / n) * y_scale
    spacing = float(np.median(np.diff(wl)))
    return ResonanceFit(
        wavelength=float(wl0),
        fwhm=float(fwhm),
        q=float(wl0 / fwhm),
        amplitude=float(a * y_scale),
        baseline=float(b * y_scale),
        rms_residual=rms,
        lower_bound=bool(fwhm < 2.0 * spacing),
        orientation=orientation,
        iterations=iters,
    )


def synthetic_spectrum(wavelength: float, q: float, seed: int, noise: float = 0.0,
                       span_linewidths: float = 5.0, n: int = 2001, amplitude: float = 1.0,
                       baseline: float = 0.0) -> Spectrum:
    """Lorentzian peak sampled over +/- ``span_linewidths`` FWHM, with multiplicative noise.

    Each sample is scaled by ``1 + noise * N(0, 1)`` drawn from a generator
    seeded with ``seed`` and clipped at zero.
    """
    if not (wavelength > 0 and q > 0):
        raise ValueError("wavelength and Q must be > 0")
    fwhm = wavelength / q
    wl = np.linspace(wavelength - span_linewidths * fwhm, wavelength + span_linewidths * fwhm, n)
    y = lorentzian(wl, wavelength, fwhm, amplitude, baseline)
    if noise:
        y = y * (1.0 + noise * np.random.default_rng(seed).standard_normal(n))
    return Spectrum(wl, np.clip(y, 0.0, None))
