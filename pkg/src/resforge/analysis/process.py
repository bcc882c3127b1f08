"""Scattering-loss scaling and fabrication step planning from nominal rates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

#: Nominal rates (nm per cycle or nm/s).
ALD_NM_PER_CYCLE = 0.06
TIO2_ETCH_NM_S = (1.5, 1.7)
PMMA_ETCH_NM_S = 2.5
DESCUM_S = 3.0
MEMBRANE_ETCH_NM_S = (1.2, 1.4)


def scattering_loss_ratio(sigma1: float, wl1: float, sigma2: float, wl2: float) -> float:
    """Ratio of sidewall scattering loss, which scales as roughness^2 / wavelength^3."""
    for v in (sigma1, wl1, sigma2, wl2):
        if not v > 0:
            raise ValueError("roughness and wavelength must be > 0")
    return (sigma1 * sigma1 * wl2 ** 3) / (sigma2 * sigma2 * wl1 ** 3)


@dataclass
class ProcessPlan:
    """Deposition cycles and etch durations; times are (fast, slow) bounds in s."""

    ald_cycles: int
    tio2_etch_time: tuple[float, float]
    pmma_descum_removal: float
    membrane_etch_time: tuple[float, float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tio2_etch_time"] = list(self.tio2_etch_time)
        d["membrane_etch_time"] = list(self.membrane_etch_time)
        return d


def process_plan(target_tio2: float, overfill: float, thin_from: float = 0.0,
                 thin_to: float = 0.0) -> ProcessPlan:
    """Plan deposition and etch steps; all thicknesses in nm."""
    for name, v in (("target", target_tio2), ("overfill", overfill),
                    ("thin_from", thin_from), ("thin_to", thin_to)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0")
    if thin_from < thin_to:
        raise ValueError("membrane thinning must not increase thickness")
    # round before ceil so that exact multiples are not bumped by float error
    cycles = math.ceil(round((target_tio2 + overfill) / ALD_NM_PER_CYCLE, 9))
    etch = (overfill / TIO2_ETCH_NM_S[1], overfill / TIO2_ETCH_NM_S[0])
    removed = thin_from - thin_to
    mem = (removed / MEMBRANE_ETCH_NM_S[1], removed / MEMBRANE_ETCH_NM_S[0])
    return ProcessPlan(cycles, etch, DESCUM_S * PMMA_ETCH_NM_S, mem)
