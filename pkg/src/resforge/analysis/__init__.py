"""Spectrum handling, resonance fitting, ensemble statistics and process planning."""

from .fitting import ResonanceFit, fit_lorentzian, lorentzian, noise_floor, synthetic_spectrum
from .process import ProcessPlan, process_plan, scattering_loss_ratio
from .spectrum import Spectrum, parse_csv, read_csv, write_csv
from .stats import EnsembleStats, ensemble_stats, format_table, synthetic_ensemble

__all__ = [
    "ResonanceFit", "fit_lorentzian", "lorentzian", "noise_floor", "synthetic_spectrum",
    "ProcessPlan", "process_plan", "scattering_loss_ratio",
    "Spectrum", "parse_csv", "read_csv", "write_csv",
    "EnsembleStats", "ensemble_stats", "format_table", "synthetic_ensemble",
]
