"""Delayed-entanglement-echo toolkit for NV electron-nuclear spin registers.

Layers, bottom to top:

* ``constants`` / ``spin_system`` -- physical constants, frames, manifolds,
  hyperfine and dipolar geometry.
* ``bath`` -- random nuclear-spin baths on the diamond lattice, cluster
  partitions, addressability counting.
* ``schedule`` -- pulse-sequence containers and builders (CP/AXY trains,
  rf addressing, delay blocks, the delayed echo itself).
* ``oracles`` -- closed-form predictions used to cross-check the numerics.
* ``engine`` -- Hamiltonian assembly, unitary/Lindblad propagation, cluster
  expansion, sweeps, and the electron-nitrogen swap study.
* ``config`` / ``presets`` / ``cli`` -- TOML-driven runs.
"""

from .bath import (
    BathSpin,
    ClusterPartition,
    SpinBath,
    addressable_census,
    count_addressable,
    generate_bath,
    load_bath,
    partition_clusters,
    save_bath,
)
from .constants import CONSTANTS, HBAR, TWO_PI, PhysicalConstants, gauss
from .errors import (
    ConfigError,
    DelayEchoError,
    DomainError,
    ToleranceError,
    ValidationError,
)
from .oracles import (
    SignalParams,
    TypeDPairPrediction,
    ideal_two_qubit_gates,
    multi_spin_coherence,
    single_spin_coherence,
    type_d_pair_predictions,
    type_h_pair_population,
)
from .schedule import (
    ControlSchedule,
    DdRfDelay,
    DecoupledDelay,
    LGField,
    MemorySwapDelay,
    NuclearCpDelay,
    RfAddress,
    build_axy,
    build_cp,
    build_delayed_entanglement_echo,
    fourier_coefficients,
    modulation_function,
    parse_schedule,
    serialize_schedule,
)
from .spin_system import MS0, MSM1, QubitManifold, dipolar_coupling, hyperfine_vector

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BathSpin",
    "ClusterPartition",
    "SpinBath",
    "addressable_census",
    "count_addressable",
    "generate_bath",
    "load_bath",
    "partition_clusters",
    "save_bath",
    "CONSTANTS",
    "HBAR",
    "TWO_PI",
    "PhysicalConstants",
    "gauss",
    "ConfigError",
    "DelayEchoError",
    "DomainError",
    "ToleranceError",
    "ValidationError",
    "SignalParams",
    "TypeDPairPrediction",
    "ideal_two_qubit_gates",
    "multi_spin_coherence",
    "single_spin_coherence",
    "type_d_pair_predictions",
    "type_h_pair_population",
    "ControlSchedule",
    "DdRfDelay",
    "DecoupledDelay",
    "LGField",
    "MemorySwapDelay",
    "NuclearCpDelay",
    "RfAddress",
    "build_axy",
    "build_cp",
    "build_delayed_entanglement_echo",
    "fourier_coefficients",
    "modulation_function",
    "parse_schedule",
    "serialize_schedule",
    "MS0",
    "MSM1",
    "QubitManifold",
    "dipolar_coupling",
    "hyperfine_vector",
]
