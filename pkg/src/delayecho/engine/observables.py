"""Observable extraction: coherence signals and gate fidelities."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..spin_system import QubitManifold
from .state import QuantumState, manifold_indices

__all__ = [
    "coherence",
    "signed_coherence",
    "complex_coherence",
    "population",
    "gate_fidelity",
]


def complex_coherence(state: QuantumState, manifold: QubitManifold) -> complex:
    """2 <up| rho_e |down> of the reduced electron state — the full complex
    off-diagonal, used by the cluster factorization."""
    rho_e = state.electron_density()
    up, down = manifold_indices(manifold, state.dims[0])
    return 2.0 * complex(rho_e[up, down])


def coherence(state: QuantumState, manifold: QubitManifold) -> tuple[float, float]:
    """(L, P): L = 2 |<down| rho_e |up>| and the echo population (1 + L)/2."""
    l = abs(complex_coherence(state, manifold))
    return l, 0.5 * (1.0 + l)


def signed_coherence(state: QuantumState, manifold: QubitManifold) -> float:
    """The signed quadrature 2 Re <up| rho_e |down>.

    This is the directly plotted echo signal: it goes negative when the
    conditional phase crosses pi/2, which is what distinguishes one spin
    (floor -1) from two equivalent spins (floor 0).
    """
    return complex_coherence(state, manifold).real


def population(state: QuantumState, manifold: QubitManifold,
               signed: bool = True) -> float:
    """P = (1 + L)/2 with the signed (default) or absolute coherence."""
    l = signed_coherence(state, manifold) if signed else coherence(
        state, manifold)[0]
    return 0.5 * (1.0 + l)


def gate_fidelity(target: np.ndarray, realized: np.ndarray) -> float:
    """F = |Tr(G^dag U)| / Tr(G^dag G), so F(G, G) = 1 and global phases
    drop out."""
    target = np.asarray(target, dtype=complex)
    realized = np.asarray(realized, dtype=complex)
    if target.shape != realized.shape or target.ndim != 2:
        raise ValidationError(
            f"operator shapes differ: {target.shape} vs {realized.shape}"
        )
    denom = float(np.trace(target.conj().T @ target).real)
    if denom <= 0.0:
        raise ValidationError("target operator has zero norm")
    return float(abs(np.trace(target.conj().T @ realized)) / denom)
