"""Steer open quantum systems with incoherent light and coherent pulses."""

from .controllability import lie_closure, system_closure
from .kernels import BACKEND as KERNEL_BACKEND
from .liouville import SpectralDensity, build_dissipator, spectral_gap, steady_state
from .propagator import evolve_incoherent, evolve_pulse, run_schedule
from .protocol import optimal_density, synthesize_schedule
from .states import DensityMatrix, SystemSpec, trace_distance, validate_density

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "KERNEL_BACKEND",
    "SpectralDensity",
    "SystemSpec",
    "build_dissipator",
    "evolve_incoherent",
    "evolve_pulse",
    "lie_closure",
    "optimal_density",
    "run_schedule",
    "spectral_gap",
    "steady_state",
    "synthesize_schedule",
    "system_closure",
    "trace_distance",
    "validate_density",
]
