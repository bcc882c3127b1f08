"""Planar stacks at normal incidence and 1D periodic band gaps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


def transfer_matrix(layers, wavelength, n_in: float = 1.0, n_out: float = 1.0):
    """Normal-incidence power reflectance and transmittance of a layer stack.

    Parameters
    ----------
    layers : sequence of (n, thickness)
        Ordered from the incidence side; thickness in um.
    wavelength : float or array
    n_in, n_out : float
        Semi-infinite incidence medium and substrate.

    Returns
    -------
    R, T : float or ndarray
    """
    wl = np.atleast_1d(np.asarray(wavelength, dtype=float))
    k0 = 2 * math.pi / wl
    m11 = np.ones_like(wl, dtype=complex)
    m12 = np.zeros_like(m11)
    m21 = np.zeros_like(m11)
    m22 = np.ones_like(m11)
    for n, d in layers:
        if not d > 0:
            raise ValueError("layer thickness must be > 0")
        delta = k0 * n * d
        c, s = np.cos(delta), np.sin(delta)
        a11, a12, a21, a22 = c, 1j * s / n, 1j * n * s, c
        m11, m12, m21, m22 = (m11 * a11 + m12 * a21, m11 * a12 + m12 * a22,
                              m21 * a11 + m22 * a21, m21 * a12 + m22 * a22)
    b = m11 + m12 * n_out
    cc = m21 + m22 * n_out
    denom = n_in * b + cc
    r = (n_in * b - cc) / denom
    t = 2 * n_in / denom
    R = np.abs(r) ** 2
    T = (n_out / n_in) * np.abs(t) ** 2
    if np.ndim(wavelength) == 0:
        return float(R[0]), float(T[0])
    return R, T


def reflection_coefficient(layers, wavelength, n_in=1.0, n_out=1.0):
    """Complex amplitude reflection coefficient (same conventions as transfer_matrix)."""
    wl = np.atleast_1d(np.asarray(wavelength, dtype=float))
    k0 = 2 * math.pi / wl
    M = np.broadcast_to(np.eye(2, dtype=complex), wl.shape + (2, 2)).copy()
    for n, d in layers:
        delta = k0 * n * d
        A = np.empty(wl.shape + (2, 2), dtype=complex)
        A[..., 0, 0] = np.cos(delta)
        A[..., 0, 1] = 1j * np.sin(delta) / n
        A[..., 1, 0] = 1j * n * np.sin(delta)
        A[..., 1, 1] = np.cos(delta)
        M = M @ A
    b = M[..., 0, 0] + M[..., 0, 1] * n_out
    c = M[..., 1, 0] + M[..., 1, 1] * n_out
    return (n_in * b - c) / (n_in * b + c)


@dataclass
class BlochBand:
    """Bloch parameter cos(K L) over a wavelength grid, with gap edges."""

    wavelengths: np.ndarray
    cos_kl: np.ndarray
    gaps: list[tuple[float, float]]
    segments: tuple[tuple[float, float], tuple[float, float]]

    def in_gap(self, wavelength: float) -> bool:
        return abs(bloch_cos(self.segments, wavelength)) > 1.0

    def gap_containing(self, wavelength: float):
        for lo, hi in self.gaps:
            if lo <= wavelength <= hi:
                return lo, hi
        return None

    def to_dict(self) -> dict:
        return {"segments": [list(s) for s in self.segments],
                "gaps_um": [list(g) for g in self.gaps]}


def bloch_cos(segments, wavelength):
    """cos(K L) for a two-segment unit cell at normal incidence."""
    (na, da), (nb, db) = segments
    k0 = 2 * math.pi / np.asarray(wavelength, dtype=float)
    ka, kb = k0 * na, k0 * nb
    return (np.cos(ka * da) * np.cos(kb * db)
            - 0.5 * (ka / kb + kb / ka) * np.sin(ka * da) * np.sin(kb * db))


def bloch_band_1d(seg_a, seg_b, wl_range, n_samples: int = 2001, tol: float = 1e-10) -> BlochBand:
    """Band structure of a two-segment periodic medium and its gaps in ``wl_range``.

    Gap edges, where |cos(K L)| = 1, are located by bracketing on a uniform
    wavelength grid and refined with Brent's method to ``tol``.
    """
    segments = (tuple(seg_a), tuple(seg_b))
    lo, hi = wl_range
    wl = np.linspace(lo, hi, n_samples)
    ck = bloch_cos(segments, wl)
    f = lambda w: abs(bloch_cos(segments, w)) - 1.0
    excess = np.abs(ck) - 1.0
    # uniform media give |cos| = 1 up to rounding; that is not a gap
    excess = np.where(np.abs(excess) < 1e-12, -1e-12, excess)
    inside = excess > 0
    gaps = []
    start = lo if inside[0] else None
    for i in range(1, len(wl)):
        if inside[i] and not inside[i - 1]:
            start = brentq(f, wl[i - 1], wl[i], xtol=tol)
        elif inside[i - 1] and not inside[i]:
            end = brentq(f, wl[i - 1], wl[i], xtol=tol)
            gaps.append((float(start), float(end)))
            start = None
    if start is not None:
        gaps.append((float(start), float(hi)))
    return BlochBand(wl, ck, gaps, segments)
