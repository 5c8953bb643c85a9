"""Numerical propagation of the spin register under control schedules."""

from .cce import CceResult, MemorySpec, cce_signal
from .hamiltonian import EngineOptions, RegisterSpin, SpinRegister
from .lindblad import (
    IlluminationRates,
    LindbladModel,
    illumination_steady_population,
)
from .nitrogen import (
    NitrogenGateResult,
    NitrogenGateSettings,
    ideal_swap_target,
    nv_nitrogen_levels,
    simulate_swap,
)
from .observables import (
    coherence,
    complex_coherence,
    gate_fidelity,
    population,
    signed_coherence,
)
from .propagate import DynamicsEngine, PropagationReport
from .state import (
    QuantumState,
    axis_rotation,
    electron_plus_vector,
    pure_product_state,
    spin_operators,
    thermal_state,
)
from .sweep import (
    EchoProtocol,
    SpectrumResult,
    SweepSpec,
    export_spectrum,
    run_sweep,
)

__all__ = [
    "CceResult",
    "MemorySpec",
    "cce_signal",
    "EngineOptions",
    "RegisterSpin",
    "SpinRegister",
    "IlluminationRates",
    "LindbladModel",
    "illumination_steady_population",
    "NitrogenGateResult",
    "NitrogenGateSettings",
    "ideal_swap_target",
    "nv_nitrogen_levels",
    "simulate_swap",
    "coherence",
    "complex_coherence",
    "gate_fidelity",
    "population",
    "signed_coherence",
    "DynamicsEngine",
    "PropagationReport",
    "QuantumState",
    "axis_rotation",
    "electron_plus_vector",
    "pure_product_state",
    "spin_operators",
    "thermal_state",
    "EchoProtocol",
    "SpectrumResult",
    "SweepSpec",
    "export_spectrum",
    "run_sweep",
]
