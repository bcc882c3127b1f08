"""Finite-difference time-domain solver on the Yee grid."""

from .checkpoint import export_record, load_record, read_checkpoint, restore_checkpoint, save_checkpoint
from .domain import COMPONENTS, PmlParams, SimulationDomain, component_offsets
from .layered import StackResult, pml_reflection, stack_reflectance
from .monitors import DftMonitor, FieldRecord, FluxMonitor, TimeProbe, flux_box
from .solver import Simulation, default_workers, ringdown_probe, run, step
from .sources import SourceSpec, gaussian_pulse

__all__ = [
    "export_record", "load_record", "read_checkpoint", "restore_checkpoint", "save_checkpoint",
    "StackResult", "pml_reflection", "stack_reflectance",
    "COMPONENTS", "PmlParams", "SimulationDomain", "component_offsets",
    "DftMonitor", "FieldRecord", "FluxMonitor", "TimeProbe", "flux_box",
    "Simulation", "default_workers", "ringdown_probe", "run", "step",
    "SourceSpec", "gaussian_pulse",
]
