"""Cluster-correlation factorization of the echo signal.

Each cluster of the partition is evolved as its own electron (x) cluster
register through the identical schedule; intercluster couplings are
dropped.  The total electron coherence is then the product of the complex
per-cluster factors.  With a single cluster spanning the whole bath this
reduces to the direct simulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bath import ClusterPartition, SpinBath
from ..errors import DomainError, ValidationError
from ..schedule import ControlSchedule
from ..spin_system import CONSTANTS
from .hamiltonian import EngineOptions, RegisterSpin, SpinRegister
from .lindblad import LindbladModel
from .observables import complex_coherence
from .propagate import DynamicsEngine, PropagationReport
from .state import QuantumState, electron_plus_vector, thermal_state

__all__ = ["CceResult", "MemorySpec", "cce_signal"]


@dataclass(frozen=True)
class MemorySpec:
    """An idealized storage spin appended to every cluster register.

    The spin keeps its species' gyromagnetic ratio (so it precesses and
    feels rf cross-talk honestly) but carries no hyperfine coupling — the
    swap bookkeeping, not the memory's own level structure, is what the
    factorized signal needs.  ``p_up`` sets the initial population of the
    qubit state the electron's |up> amplitude lands on.
    """

    species: str = "14N"
    p_up: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_up <= 1.0:
            raise DomainError("memory polarization must lie in [0, 1]")

    def register_spin(self, constants=CONSTANTS) -> RegisterSpin:
        return RegisterSpin(
            species=self.species,
            gamma=constants.gamma(self.species),
            dim=2,
            hyperfine=np.zeros(3),
            coupled=False,
        )


@dataclass
class CceResult:
    """Factorized echo signal and the numerical health of each factor."""

    factors: tuple[complex, ...]
    cluster_sizes: tuple[int, ...]
    max_dropped_coupling: float
    dropped_above_threshold: int
    failed: bool
    reports: tuple[PropagationReport, ...]

    @property
    def total(self) -> complex:
        out = complex(1.0)
        for f in self.factors:
            out *= f
        return out

    @property
    def l_signed(self) -> float:
        return self.total.real

    @property
    def l_abs(self) -> float:
        return abs(self.total)

    @property
    def population(self) -> float:
        return 0.5 * (1.0 + self.l_signed)


def cce_signal(
    bath: SpinBath,
    partition: ClusterPartition,
    schedule: ControlSchedule,
    options: EngineOptions | None = None,
    model: LindbladModel | None = None,
    electron_dim: int | None = None,
    memory: MemorySpec | None = None,
) -> CceResult:
    """Evolve every cluster through ``schedule`` and multiply the factors.

    The electron starts in (|up> + |down>)/sqrt(2) on the bath manifold and
    every cluster's nuclei start maximally mixed.  With ``memory``, the
    storage spin is appended as the last register site of every cluster
    (swap events address it as index -1) with its configured polarization.
    Clusters are processed in partition order, so the reduction is
    deterministic.

    With dissipation or a storage spin, the first factor is the bare
    central-register signal and the cluster factors are divided by it, so
    the common damage enters the product exactly once.
    """
    partition.validate_cover(len(bath.spins))
    if electron_dim is None:
        electron_dim = 3 if (
            model is not None
            and (model.has_background or model.illumination is not None)
        ) else 2
    options = options if options is not None else EngineOptions()

    def one_register(cluster) -> tuple[complex, PropagationReport]:
        register = SpinRegister.from_bath(
            bath, cluster, electron_dim=electron_dim
        )
        if memory is not None:
            register = SpinRegister(
                register.spins + (memory.register_spin(register.constants),),
                b_z=register.b_z,
                manifold=register.manifold,
                electron_dim=electron_dim,
                constants=register.constants,
            )
        engine = DynamicsEngine(register, options, model)
        state = thermal_state(
            register.dims, electron_plus_vector(electron_dim, register.manifold)
        )
        if memory is not None:
            # overwrite the maximally mixed memory slot with its polarization
            evec = electron_plus_vector(electron_dim, register.manifold)
            rho = np.outer(evec, evec.conj())
            for d in register.dims[1:-1]:
                rho = np.kron(rho, np.eye(d) / d)
            rho = np.kron(rho, np.diag([memory.p_up, 1.0 - memory.p_up]))
            state = QuantumState(register.dims, rho)
        final, report = engine.evolve(state, schedule)
        return complex_coherence(final, register.manifold), report

    factors: list[complex] = []
    sizes: list[int] = []
    reports: list[PropagationReport] = []
    failed = False
    if model is not None or memory is not None:
        # dissipation / storage damage is common to every cluster, so the
        # plain cluster product would raise it to the cluster count.  Divide
        # each factor by the empty-register reference and count it once.
        base, base_report = one_register(())
        factors.append(base)
        sizes.append(0)
        reports.append(base_report)
        failed = base_report.failed
        norm = base if abs(base) > 1e-9 else complex(1.0)
    else:
        norm = complex(1.0)
    for cluster in partition.clusters:
        factor, report = one_register(cluster)
        factors.append(factor / norm)
        sizes.append(len(cluster))
        reports.append(report)
        failed = failed or report.failed
    return CceResult(
        factors=tuple(factors),
        cluster_sizes=tuple(sizes),
        max_dropped_coupling=partition.max_dropped_coupling,
        dropped_above_threshold=sum(
            1 for d in partition.dropped if d.size_limited
        ),
        failed=failed,
        reports=tuple(reports),
    )
