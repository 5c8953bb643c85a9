"""Closed-form predictions for the delayed-entanglement echo.

These are the secular, strong-field, instantaneous-pulse idealizations of
the full dynamics.  They serve as ground truth for the numerical engine
(which must agree to 1e-8 in RWA mode on matching configurations) and as
fast predictors for sweep planning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "SignalParams",
    "single_spin_coherence",
    "multi_spin_coherence",
    "entangling_gate_phase",
    "type_h_pair_population",
    "TypeDPairPrediction",
    "type_d_pair_predictions",
    "IdealGates",
    "ideal_two_qubit_gates",
    "AddressingDescriptor",
    "dd_addressing_hamiltonian",
]

_SIGMA = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


@dataclass(frozen=True)
class SignalParams:
    """One addressed-spin entry of the echo signal.

    ``a_parallel`` is the parallel hyperfine component (rad/s), ``eta`` the
    manifold factor (1/2 for {0,+1}, 1 for {-1,+1}), ``theta_rf`` the
    rotation angle applied during the delay, and ``multiplicity`` the
    number of bath spins sharing this precession frequency.
    """

    a_parallel: float
    eta: float
    tau: float
    theta_rf: float
    multiplicity: int = 1

    def __post_init__(self) -> None:
        if self.tau < 0.0:
            raise DomainError("tau must be non-negative")
        if self.eta not in (0.5, 1.0):
            raise DomainError("eta must be 1/2 or 1")
        if not isinstance(self.multiplicity, int) or self.multiplicity < 1:
            raise DomainError("multiplicity must be an integer >= 1")


def single_spin_coherence(params: SignalParams) -> float:
    """Echo coherence contributed by one spin rotated by theta_rf.

    L = [(1 - cos(theta)) cos(2 eta A_par tau) + 1 + cos(theta)] / 2,
    which interpolates between 1 (theta = 0, the plain echo) and the full
    conditional-phase oscillation cos(2 eta A_par tau) at theta = pi.
    """
    phase = 2.0 * params.eta * params.a_parallel * params.tau
    c = math.cos(params.theta_rf)
    return 0.5 * ((1.0 - c) * math.cos(phase) + 1.0 + c)


def multi_spin_coherence(params_list) -> float:
    """Product signal of independently addressed spins, L = prod L_i^p_i."""
    total = 1.0
    for params in params_list:
        total *= single_spin_coherence(params) ** params.multiplicity
    return total


def entangling_gate_phase(a_parallel: float, eta: float, tau: float):
    """Conditional nuclear z-rotations (U_plus, U_minus) of the echo gate.

    U_pm = exp(mp 2i eta tau A_par I_z): the nuclear spin winds opposite
    phases on the two electron branches, so U_plus @ U_minus.conj().T =
    exp(-4i eta tau A_par I_z) is the net entangling rotation.
    """
    if tau < 0.0:
        raise DomainError("tau must be non-negative")
    half = eta * tau * a_parallel  # phi/2 with I_z = sigma_z / 2
    u_plus = np.diag([np.exp(-1.0j * half), np.exp(1.0j * half)])
    u_minus = np.diag([np.exp(1.0j * half), np.exp(-1.0j * half)])
    return u_plus, u_minus


def type_h_pair_population(a_parallel: float, eta: float, tau: float) -> float:
    """Electron population for a hyperfine-dominated pair, conditioned on
    the partner spin being up: P = 1/2 + [1 + cos(2 eta A_par tau)] / 4.

    Never drops below 1/2 - the conditioning halves the oscillating part,
    which is the experimental signature distinguishing this regime from a
    lone spin.
    """
    if tau < 0.0:
        raise DomainError("tau must be non-negative")
    return 0.5 + 0.25 * (1.0 + math.cos(2.0 * eta * a_parallel * tau))


@dataclass(frozen=True)
class TypeDPairPrediction:
    """Observables of a dipolar-dominated (near-degenerate) nuclear pair."""

    transition_offsets: tuple[float, float]  # rad/s relative to omega_n
    splitting: float  # rad/s
    collective_flip_time: float  # s
    single_flip_time: float  # s
    population: float

    @property
    def flip_time_ratio(self) -> float:
        return self.collective_flip_time / self.single_flip_time


def type_d_pair_predictions(
    d_jk: float,
    gamma_n: float,
    b_x: float,
    a_parallel: float,
    eta: float,
    tau: float,
) -> TypeDPairPrediction:
    """Strongly coupled pair: rf transitions sit at omega_n -+ 3 d_jk / 4
    and the resonant collective flip is sqrt(2) faster than a lone spin's.

    The pair behaves as a spin-1 within its triplet sector; the dipolar
    interaction shifts the m = +-1 levels by d/4 and the m = 0 level by
    -d/2, and the sqrt(2) matrix-element enhancement shortens the pi time.
    """
    if b_x <= 0.0:
        raise DomainError("rf amplitude must be positive")
    if gamma_n == 0.0:
        raise DomainError("gyromagnetic ratio must be non-zero")
    if tau < 0.0:
        raise DomainError("tau must be non-negative")
    rabi = abs(gamma_n) * b_x
    single = 2.0 * math.pi / rabi
    return TypeDPairPrediction(
        transition_offsets=(-0.75 * d_jk, 0.75 * d_jk),
        splitting=1.5 * abs(d_jk),
        collective_flip_time=single / math.sqrt(2.0),
        single_flip_time=single,
        population=0.5 + 0.25 * (math.cos(2.0 * eta * a_parallel * tau) + 1.0),
    )


def _pauli_exponent(first: str, second: str) -> np.ndarray:
    """exp(i (pi/4) sigma_first x sigma_second) in closed form."""
    product = np.kron(_SIGMA[first], _SIGMA[second])
    return (np.eye(4, dtype=complex) + 1.0j * product) / math.sqrt(2.0)


@dataclass(frozen=True)
class IdealGates:
    """The echo-generated two-qubit gate family, as exact 4x4 unitaries."""

    u_zx: np.ndarray
    u_zy: np.ndarray
    u_zz: np.ndarray
    u_xx: np.ndarray
    u_yy: np.ndarray
    iswap: np.ndarray
    swap: np.ndarray

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return getattr(self, name)
        except AttributeError:
            raise ValidationError(f"unknown gate {name!r}") from None


def ideal_two_qubit_gates() -> IdealGates:
    """Construct u_z-alpha, u_alpha-alpha, the iSWAP and the SWAP.

    The basic resource is u_z-alpha = exp(i (pi/4) sigma_z sigma_alpha)
    generated by conditional precession; same-axis versions are the
    electron-side pi/2-conjugates and share the closed form
    (1 + i sigma sigma)/sqrt(2).  Then iSWAP = u_yy u_xx (phase i on
    anti-aligned basis states) and SWAP = e^{-i pi/4} u_zz iSWAP.
    """
    u_yy = _pauli_exponent("y", "y")
    u_xx = _pauli_exponent("x", "x")
    u_zz = _pauli_exponent("z", "z")
    iswap = u_yy @ u_xx
    swap = np.exp(-1.0j * math.pi / 4.0) * (u_zz @ iswap)
    return IdealGates(
        u_zx=_pauli_exponent("z", "x"),
        u_zy=_pauli_exponent("z", "y"),
        u_zz=u_zz,
        u_xx=u_xx,
        u_yy=u_yy,
        iswap=iswap,
        swap=swap,
    )


@dataclass(frozen=True)
class AddressingDescriptor:
    """Effective resonant electron-nuclear coupling produced by DD.

    ``coupling`` multiplies sigma_z I_x (pulsed) or sigma_z I_x + sigma_y
    I_y (continuous, in the dressed frame).  ``selectivity`` quantifies the
    off-resonance protection of a spectator spin.
    """

    mode: str
    coupling: float  # rad/s
    operator: str
    gate_time: float  # s, iSWAP-scale duration 2 pi / (f_k A_perp)

    def selectivity(self, omega_resonant: float, omega_spectator: float) -> float:
        """|omega_n - omega_j| / |coupling scale| — large means untouched."""
        if self.coupling == 0.0:
            return math.inf
        return abs(omega_resonant - omega_spectator) / abs(2.0 * self.coupling)

    def is_selective(self, omega_resonant: float, omega_spectator: float,
                     factor: float = 10.0) -> bool:
        return self.selectivity(omega_resonant, omega_spectator) >= factor


def dd_addressing_hamiltonian(
    a_perp: float, f_k: float, eta: float, mode: str = "pulsed"
) -> AddressingDescriptor:
    """First-order effective Hamiltonian of resonant DD addressing.

    Pulsed sequences at omega_n = k omega_DD pick up (eta/2) f_k A_perp on
    sigma_z I_x; a continuous drive locked at Omega_e = omega_j produces
    (eta/2) A_perp on the flip-flop combination instead.
    """
    if a_perp < 0.0:
        raise DomainError("A_perp is a magnitude; must be >= 0")
    if mode == "pulsed":
        coupling = 0.5 * eta * f_k * a_perp
        operator = "sigma_z I_x"
        scale = abs(f_k) * a_perp
    elif mode == "continuous":
        coupling = 0.5 * eta * a_perp
        operator = "sigma_z I_x + sigma_y I_y"
        scale = a_perp
    else:
        raise ValidationError(f"unknown addressing mode {mode!r}")
    gate_time = math.inf if scale == 0.0 else 2.0 * math.pi / scale
    return AddressingDescriptor(
        mode=mode, coupling=coupling, operator=operator, gate_time=gate_time
    )
