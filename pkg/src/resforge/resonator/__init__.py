"""Analytic resonator models, cavity extraction and cavity figures of merit."""

from .cavity import (
    CavityResult,
    EffectiveIndices,
    RingdownFit,
    cavity_resonance,
    effective_indices,
    fit_ringdown,
    mirror_band,
    padded_power_spectrum,
    phc_scene,
    resonance_snapshot,
    select_gap,
)
from .multilayer import BlochBand, bloch_band_1d, bloch_cos, reflection_coefficient, transfer_matrix
from .purcell import (
    Cooperativity,
    ModeVolume,
    PurcellMap,
    cooperativity,
    energy_density,
    mode_volume,
    purcell_factor,
    purcell_map,
)
from .ring import CouplingFit, RingModel, calibrate_coupling, fsr, q_compose, ring_spectra

__all__ = [
    "CavityResult", "EffectiveIndices", "RingdownFit", "cavity_resonance", "effective_indices",
    "fit_ringdown", "mirror_band", "padded_power_spectrum", "phc_scene", "resonance_snapshot",
    "select_gap",
    "BlochBand", "bloch_band_1d", "bloch_cos", "reflection_coefficient", "transfer_matrix",
    "Cooperativity", "ModeVolume", "PurcellMap", "cooperativity", "energy_density", "mode_volume",
    "purcell_factor", "purcell_map",
    "CouplingFit", "RingModel", "calibrate_coupling", "fsr", "q_compose", "ring_spectra",
]
