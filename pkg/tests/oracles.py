"""Independent reference calculations used to check the library.

Each oracle uses a different formulation from the code under test so that a
shared mistake is unlikely: Rouard's recursion instead of characteristic
matrices, the symmetric-slab half-width equations instead of the general
asymmetric relation, closed-form Gaussian integrals, and analytic cavity
eigenfrequencies.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq


def rouard(layers, wavelength, n_in=1.0, n_out=1.0):
    """(R, T) of a lossless planar stack by recursive Fresnel summation.

    ``layers`` lists (index, thickness) from the incidence side.
    """
    wl = float(wavelength)
    indices = [n_in] + [n for n, _ in layers] + [n_out]
    r_next, t_next = 0.0 + 0j, 1.0 + 0j
    # walk from the exit interface back to the entrance
    for j in range(len(indices) - 2, -1, -1):
        na, nb = indices[j], indices[j + 1]
        r_ab = (na - nb) / (na + nb)
        t_ab = 2 * na / (na + nb)
        if j + 1 < len(indices) - 1:
            d = layers[j][1]
            ph = np.exp(1j * 2 * math.pi * nb * d / wl)
        else:
            ph = 1.0
        den = 1 + r_ab * r_next * ph ** 2
        r_next, t_next = (r_ab + r_next * ph ** 2) / den, t_ab * t_next * ph / den
    return abs(r_next) ** 2, (n_out / n_in) * abs(t_next) ** 2


def symmetric_slab_index(n_core, n_clad, thickness, wavelength, polarization="TE"):
    """Fundamental even mode of a symmetric slab: tan(kappa d/2) = rho gamma / kappa."""
    k0 = 2 * math.pi / wavelength
    rho = 1.0 if polarization == "TE" else (n_core / n_clad) ** 2

    def f(n):
        kappa = k0 * math.sqrt(n_core ** 2 - n ** 2)
        gamma = k0 * math.sqrt(n ** 2 - n_clad ** 2)
        return math.tan(kappa * thickness / 2) - rho * gamma / kappa

    # the fundamental root has kappa d / 2 in (0, pi/2)
    kmax = math.pi / thickness
    n_lo = math.sqrt(max(n_clad ** 2, n_core ** 2 - (kmax / k0) ** 2)) + 1e-12
    return brentq(f, n_lo, n_core - 1e-12, xtol=1e-15, rtol=1e-15)


def gaussian_mode_volume(sigmas):
    """Volume of exp(-sum x_i^2 / (2 sigma_i^2)) normalized to its peak."""
    return float(np.prod([math.sqrt(2 * math.pi) * s for s in sigmas]))


def pec_box_frequency(lx, ly, m=1, n=1):
    """Resonance frequency (1/um, c = 1) of the (m, n) mode of a 2D PEC box."""
    return 0.5 * math.sqrt((m / lx) ** 2 + (n / ly) ** 2)
