"""Spin Hamiltonian ingredients: frames, hyperfine and dipolar couplings.

The canonical coordinate frame is the NV frame with

    z || [1,1,1]/sqrt(3),   x || [1,-1,0]/sqrt(2),   y || [1,1,-2]/sqrt(6)

expressed in the cubic crystal axes.  All positions stored by the package
are NV-frame components in nanometres; :func:`cubic_to_nv` and
:func:`nv_to_cubic` convert to/from cubic crystal coordinates (in which
lattice sites have the familiar integer structure).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import CONSTANTS, PhysicalConstants
from .errors import DomainError

__all__ = [
    "NV_AXIS_CUBIC",
    "CUBIC_TO_NV",
    "cubic_to_nv",
    "nv_to_cubic",
    "QubitManifold",
    "MS0",
    "MSM1",
    "NuclearSpin",
    "HyperfineVector",
    "hyperfine_vector",
    "hyperfine_components",
    "rotating_frame_components",
    "dipolar_tensor",
    "dipolar_coupling",
    "precession_frame",
    "lg_effective_coupling",
    "LG_COS_GAMMA",
    "nitrogen_virtual_shifts",
]

#: NV symmetry axis in cubic coordinates.
NV_AXIS_CUBIC = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)

#: Rows are the NV-frame basis vectors (x, y, z) in cubic coordinates.
CUBIC_TO_NV = np.array(
    [
        [1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0), 0.0],
        [1.0 / math.sqrt(6.0), 1.0 / math.sqrt(6.0), -2.0 / math.sqrt(6.0)],
        [1.0 / math.sqrt(3.0), 1.0 / math.sqrt(3.0), 1.0 / math.sqrt(3.0)],
    ]
)

#: Magic-angle cosine used by Lee-Goldburg decoupling (tan(gamma) = sqrt(2)).
LG_COS_GAMMA = 1.0 / math.sqrt(3.0)

_ZHAT = np.array([0.0, 0.0, 1.0])


def cubic_to_nv(position):
    """Convert cubic crystal coordinates to NV-frame components."""
    return CUBIC_TO_NV @ np.asarray(position, dtype=float)


def nv_to_cubic(position):
    """Convert NV-frame components to cubic crystal coordinates."""
    return CUBIC_TO_NV.T @ np.asarray(position, dtype=float)


@dataclass(frozen=True)
class QubitManifold:
    """Electron qubit manifold: |up> = m_s = +1, |down> = m_s = 0 or -1.

    ``eta`` is the half-difference of the two m_s values (the factor that
    scales the sigma_z * A.I interaction); ``c_eta`` is the mean m_s, which
    shifts the nuclear precession in that manifold.
    """

    down_level: int

    def __post_init__(self) -> None:
        if self.down_level not in (0, -1):
            raise DomainError(
                f"down_level must be 0 or -1, got {self.down_level!r}"
            )

    @property
    def up_level(self) -> int:
        return 1

    @property
    def eta(self) -> float:
        return (self.up_level - self.down_level) / 2.0

    @property
    def c_eta(self) -> float:
        return (self.up_level + self.down_level) / 2.0

    @property
    def name(self) -> str:
        return "ms0" if self.down_level == 0 else "msm1"

    @classmethod
    def from_name(cls, name: str) -> "QubitManifold":
        table = {"ms0": 0, "msm1": -1}
        if name not in table:
            raise DomainError(f"unknown manifold name {name!r}")
        return cls(table[name])


#: Manifold with |down> = m_s = 0 (eta = 1/2).
MS0 = QubitManifold(0)
#: Manifold with |down> = m_s = -1 (eta = 1).
MSM1 = QubitManifold(-1)


@dataclass(frozen=True)
class NuclearSpin:
    """A bath nucleus: species plus NV-frame position in nanometres."""

    species: str
    position: tuple[float, float, float]

    def __post_init__(self) -> None:
        if len(self.position) != 3:
            raise DomainError("position must have three components")
        if not all(math.isfinite(x) for x in self.position):
            raise DomainError("position components must be finite")

    @classmethod
    def carbon13(cls, position) -> "NuclearSpin":
        return cls("13C", tuple(float(x) for x in position))

    def gamma(self, constants: PhysicalConstants = CONSTANTS) -> float:
        return constants.gamma(self.species)

    def dimension(self, constants: PhysicalConstants = CONSTANTS) -> int:
        return constants.multiplicity(self.species)


@dataclass(frozen=True)
class HyperfineVector:
    """Hyperfine field of one nucleus, resolved in its precession frame."""

    vector: np.ndarray = field(repr=False)
    a_parallel: float
    a_perp: float

    @classmethod
    def from_vector(cls, vector, omega_hat=_ZHAT) -> "HyperfineVector":
        a_par, a_perp = hyperfine_components(vector, omega_hat)
        return cls(np.asarray(vector, dtype=float), a_par, a_perp)


def hyperfine_vector(
    position_nm,
    gamma_j: float,
    constants: PhysicalConstants = CONSTANTS,
) -> np.ndarray:
    """Dipolar hyperfine field A of a point-dipole electron on a nucleus.

    ``position_nm`` is the NV-frame position of the nucleus relative to the
    electron, in nanometres.  Returns the vector A in rad/s such that the
    interaction term reads S_z (A . I).

    A = (mu0/4pi) * gamma_e * gamma_j * hbar / r^3 * (z - 3 (z.r^) r^)
    """
    r = np.asarray(position_nm, dtype=float) * 1e-9
    dist = float(np.linalg.norm(r))
    if dist <= 0.0 or not math.isfinite(dist):
        raise DomainError("nuclear position must be finite and nonzero")
    rhat = r / dist
    prefactor = (
        constants.mu0_over_4pi
        * constants.gamma_e
        * gamma_j
        * constants.hbar
        / dist**3
    )
    return prefactor * (_ZHAT - 3.0 * float(rhat[2]) * rhat)


def hyperfine_components(vector, omega_hat=_ZHAT) -> tuple[float, float]:
    """Split A into (signed A_parallel, A_perp >= 0) about an axis."""
    a = np.asarray(vector, dtype=float)
    axis = np.asarray(omega_hat, dtype=float)
    a_par = float(a @ axis)
    a_perp_sq = float(a @ a) - a_par**2
    return a_par, math.sqrt(max(a_perp_sq, 0.0))


def rotating_frame_components(vector, omega_hat=_ZHAT):
    """Decompose A in the nuclear precession frame.

    Returns (A_x, A_y, A_z) vectors with A_z = (A.w^)w^, A_x = A - A_z and
    A_y = w^ x A; |A_x| = |A_y| = A_perp and |A_z| = |A_parallel|.
    """
    a = np.asarray(vector, dtype=float)
    axis = np.asarray(omega_hat, dtype=float)
    a_z = (a @ axis) * axis
    a_x = a - a_z
    a_y = np.cross(axis, a)
    return a_x, a_y, a_z


def _dipole_prefactor(
    r_j_nm, r_k_nm, gamma_j: float, gamma_k: float, constants: PhysicalConstants
) -> tuple[float, np.ndarray]:
    r = (np.asarray(r_j_nm, dtype=float) - np.asarray(r_k_nm, dtype=float)) * 1e-9
    dist = float(np.linalg.norm(r))
    if dist <= 0.0 or not math.isfinite(dist):
        raise DomainError("dipolar coupling requires distinct, finite positions")
    pref = constants.mu0_over_4pi * gamma_j * gamma_k * constants.hbar / dist**3
    return pref, r / dist


def dipolar_tensor(
    r_j_nm,
    r_k_nm,
    gamma_j: float,
    gamma_k: float,
    constants: PhysicalConstants = CONSTANTS,
) -> np.ndarray:
    """Full nuclear dipole-dipole tensor T (rad/s): H = I_j . T . I_k."""
    pref, rhat = _dipole_prefactor(r_j_nm, r_k_nm, gamma_j, gamma_k, constants)
    return pref * (np.eye(3) - 3.0 * np.outer(rhat, rhat))


def dipolar_coupling(
    r_j_nm,
    r_k_nm,
    gamma_j: float,
    gamma_k: float,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Secular dipolar coupling strength d_jk = T_zz (rad/s)."""
    pref, rhat = _dipole_prefactor(r_j_nm, r_k_nm, gamma_j, gamma_k, constants)
    return pref * (1.0 - 3.0 * float(rhat[2]) ** 2)


def precession_frame(
    b_z: float,
    hyperfine,
    manifold: QubitManifold,
    gamma_j: float,
) -> tuple[float, np.ndarray]:
    """Nuclear precession frequency and axis in a given electron manifold.

    The manifold-averaged nuclear Hamiltonian is -(gamma_j B - c_eta A).I,
    so the spin precesses at omega = |gamma_j B z - c_eta A| about the unit
    vector along that combination.  For the m_s = (+1,-1) manifold
    (c_eta = 0) this is the bare Larmor frequency along z.
    """
    if b_z <= 0.0 or not math.isfinite(b_z):
        raise DomainError("b_z must be positive and finite")
    a = np.asarray(hyperfine, dtype=float)
    w = gamma_j * b_z * _ZHAT - manifold.c_eta * a
    omega = float(np.linalg.norm(w))
    if omega == 0.0:
        raise DomainError("precession frequency vanishes; frame undefined")
    return omega, w / omega


def lg_effective_coupling(a_parallel: float, cos_gamma: float = LG_COS_GAMMA) -> float:
    """Longitudinal coupling surviving Lee-Goldburg decoupling.

    With the rf tilted to angle gamma from z, the interaction reduces to
    eta sigma_z A_parallel cos(gamma) I_z; at the magic angle
    cos(gamma) = 1/sqrt(3).
    """
    if not -1.0 <= cos_gamma <= 1.0:
        raise DomainError("cos_gamma must lie in [-1, 1]")
    return a_parallel * cos_gamma


def nitrogen_virtual_shifts(
    b_z: float, constants: PhysicalConstants = CONSTANTS
) -> dict[int, np.ndarray]:
    """Second-order level shifts of the host 14N from the transverse hyperfine.

    Returns, for each electron level m_s in (+1, 0, -1), the diagonal 3x3
    operator acting on the nitrogen (basis |+1>, |0>, |-1>) that results
    from virtually exciting the A_perp (S_x I_x + S_y I_y) flip-flops.
    Raises on the level anti-crossings D = +/- gamma_e B_z where the
    perturbative denominators vanish.
    """
    if b_z <= 0.0 or not math.isfinite(b_z):
        raise DomainError("b_z must be positive and finite")
    d_split = constants.zero_field_splitting
    zeeman = constants.gamma_e * b_z
    minus = d_split - zeeman
    plus = d_split + zeeman
    if minus == 0.0 or plus == 0.0:
        raise DomainError("level anti-crossing: D = +/- gamma_e B_z")
    w = constants.nitrogen_a_perp**2

    def diag(p1: float, z0: float, m1: float) -> np.ndarray:
        return np.diag([p1, z0, m1]).astype(float)

    shifts = {
        +1: diag(0.0, w / minus, w / minus),
        0: diag(w / -minus, w / -minus - w / plus, -w / plus),
        -1: diag(w / plus, w / plus, 0.0),
    }
    return shifts
