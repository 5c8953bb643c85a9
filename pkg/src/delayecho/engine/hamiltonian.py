"""Spin registers and Hamiltonian assembly in the electron's internal frame.

All Hamiltonians are in rad/s with the electron zero-field and Zeeman terms
rotated away.  The remaining physics, for electron level m_s and nuclei j:

    H = sum_m |m><m| (x) [ sum_j (gamma_j B_z z^ - m_s A_j) . I_j ]
        + 1_e (x) H_nn  (+ drive terms while rf / LG / lock windows are on)

The hyperfine vector enters in full ("full") or through its z-component
only ("secular"); nuclear-nuclear couplings come in four flavours, from
the full dipolar tensor down to none at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..constants import CONSTANTS, PhysicalConstants
from ..errors import DomainError, ValidationError
from ..spin_system import MS0, QubitManifold, dipolar_coupling, dipolar_tensor
from .state import spin_operators

__all__ = ["RegisterSpin", "SpinRegister", "EngineOptions", "HamiltonianParts"]

_HYPERFINE_MODES = ("secular", "full")
_NN_MODES = ("full", "secular", "ising", "off")
_DRIVE_MODES = ("rwa", "cosine")


@dataclass(frozen=True)
class EngineOptions:
    """Modelling switches for the evolution engine.

    drive: "rwa" treats rf windows in the co-rotating nuclear frame
    (exact for secular hyperfine, fast); "cosine" samples the bare
    oscillating field at ``sampling_fraction`` of the carrier period.
    """

    drive: str = "rwa"
    hyperfine: str = "secular"
    nn: str = "secular"
    sampling_fraction: float = 0.01
    unitarity_tol: float = 1e-10
    trace_tol: float = 1e-8
    negativity_tol: float = 1e-6
    lindblad_substeps: int = 1000  # fixed step = T1 / substeps

    def __post_init__(self) -> None:
        if self.drive not in _DRIVE_MODES:
            raise ValidationError(f"drive must be one of {_DRIVE_MODES}")
        if self.hyperfine not in _HYPERFINE_MODES:
            raise ValidationError(f"hyperfine must be one of {_HYPERFINE_MODES}")
        if self.nn not in _NN_MODES:
            raise ValidationError(f"nn must be one of {_NN_MODES}")
        if not 0.0 < self.sampling_fraction <= 0.01:
            raise ValidationError(
                "sampling_fraction must be in (0, 0.01] to honour the "
                "drive-sampling rule"
            )


@dataclass(frozen=True)
class RegisterSpin:
    """One nuclear spin of a register: identity plus coupling data."""

    species: str
    gamma: float
    dim: int
    hyperfine: np.ndarray  # (3,) rad/s, NV frame
    position_nm: np.ndarray | None = None  # NV frame, for nn tensors
    coupled: bool = True  # False = no nuclear-nuclear couplings (storage site)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "hyperfine", np.asarray(self.hyperfine, dtype=float)
        )
        if self.hyperfine.shape != (3,):
            raise ValidationError("hyperfine vector must have three components")
        if self.dim not in (2, 3):
            raise DomainError("nuclear spins of dimension 2 or 3 only")

    @property
    def a_parallel(self) -> float:
        return float(self.hyperfine[2])

    @property
    def a_perp(self) -> float:
        return float(np.hypot(self.hyperfine[0], self.hyperfine[1]))


class SpinRegister:
    """Electron (dim 2 or 3) plus a cluster of nuclear spins.

    Holds static structure only — the schedule walker owns all
    time-dependent aspects (current manifold, active windows).
    """

    def __init__(
        self,
        spins,
        b_z: float,
        manifold: QubitManifold = MS0,
        electron_dim: int = 2,
        constants: PhysicalConstants = CONSTANTS,
    ):
        if electron_dim not in (2, 3):
            raise DomainError("electron dimension must be 2 or 3")
        if b_z <= 0.0:
            raise DomainError("B_z must be positive")
        self.spins = tuple(spins)
        self.b_z = float(b_z)
        self.manifold = manifold
        self.electron_dim = electron_dim
        self.constants = constants
        self.dims = (electron_dim,) + tuple(s.dim for s in self.spins)
        self.total_dim = int(np.prod(self.dims))
        self._pair_tensors: dict[tuple[int, int], np.ndarray] = {}
        self._site_ops_cache: dict[tuple[int, str], np.ndarray] = {}

    # -- construction --------------------------------------------------------

    @classmethod
    def from_bath(
        cls,
        bath,
        indices=None,
        electron_dim: int = 2,
        manifold: QubitManifold | None = None,
        constants: PhysicalConstants = CONSTANTS,
    ) -> "SpinRegister":
        """Register over a bath subset (all spins when ``indices`` is None)."""
        if indices is None:
            indices = range(len(bath.spins))
        spins = []
        for i in indices:
            b = bath.spins[i]
            spins.append(
                RegisterSpin(
                    species=b.species,
                    gamma=b.gamma,
                    dim=b.dimension,
                    hyperfine=b.hyperfine,
                    position_nm=np.asarray(b.position, dtype=float),
                )
            )
        return cls(
            spins,
            b_z=bath.b_z,
            manifold=manifold if manifold is not None else bath.manifold,
            electron_dim=electron_dim,
            constants=constants,
        )

    # -- operator plumbing ----------------------------------------------------

    def site_operator(self, site: int, which: str) -> np.ndarray:
        """I_x / I_y / I_z of nuclear spin ``site`` on the full Hilbert space."""
        key = (site, which)
        cached = self._site_ops_cache.get(key)
        if cached is not None:
            return cached
        ops = dict(zip("xyz", spin_operators(self.dims[site + 1])))
        full = self.embed({site + 1: ops[which]})
        full.setflags(write=False)
        self._site_ops_cache[key] = full
        return full

    def embed(self, site_matrices: dict[int, np.ndarray]) -> np.ndarray:
        """Kron product with identities everywhere except the given sites
        (site 0 is the electron)."""
        out = np.array([[1.0]], dtype=complex)
        for i, d in enumerate(self.dims):
            m = site_matrices.get(i)
            out = np.kron(out, m if m is not None else np.eye(d))
        return out

    def electron_projector(self, index: int) -> np.ndarray:
        p = np.zeros((self.electron_dim, self.electron_dim), dtype=complex)
        p[index, index] = 1.0
        return p

    def electron_levels(self) -> tuple[int, ...]:
        """m_s value carried by each electron basis index."""
        if self.electron_dim == 3:
            return (1, 0, -1)
        # two-level registers: index 0 is |up> = +1, index 1 the manifold floor
        return (1, self.manifold.down_level)

    def pair_tensor(self, j: int, k: int) -> np.ndarray:
        """Dipolar 3x3 tensor between nuclei j and k (rad/s), cached."""
        key = (min(j, k), max(j, k))
        cached = self._pair_tensors.get(key)
        if cached is None:
            a, b = self.spins[key[0]], self.spins[key[1]]
            if a.position_nm is None or b.position_nm is None:
                raise ValidationError(
                    "nuclear-nuclear couplings need spin positions"
                )
            cached = dipolar_tensor(
                a.position_nm, b.position_nm, a.gamma, b.gamma, self.constants
            )
            cached.setflags(write=False)
            self._pair_tensors[key] = cached
        return cached

    # -- Hamiltonian assembly --------------------------------------------------

    def hyperfine_vector(self, site: int, mode: str) -> np.ndarray:
        a = self.spins[site].hyperfine
        if mode == "full":
            return a
        return np.array([0.0, 0.0, a[2]])

    def nuclear_zeeman(self) -> np.ndarray:
        h = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for j, spin in enumerate(self.spins):
            h += spin.gamma * self.b_z * self.site_operator(j, "z")
        return h

    def hyperfine_term(self, down_level: int, mode: str,
                       active=None) -> np.ndarray:
        """sum_m P_m (x) (-m A_j . I_j) over the sites in ``active``."""
        if active is None:
            active = range(len(self.spins))
        h = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        levels = self.electron_levels() if self.electron_dim == 3 else (
            1, down_level)
        for e_idx, m_s in enumerate(levels):
            if m_s == 0:
                continue
            block = np.zeros((self.total_dim, self.total_dim), dtype=complex)
            for j in active:
                a = self.hyperfine_vector(j, mode)
                for comp, axis in enumerate("xyz"):
                    if a[comp] != 0.0:
                        block += a[comp] * self.site_operator(j, axis)
            proj = self.embed({0: self.electron_projector(e_idx)})
            h += -m_s * (proj @ block)
        return h

    def nn_term(self, mode: str) -> np.ndarray:
        h = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        if mode == "off" or len(self.spins) < 2:
            return h
        for j in range(len(self.spins)):
            for k in range(j + 1, len(self.spins)):
                if not (self.spins[j].coupled and self.spins[k].coupled):
                    continue
                if mode == "full":
                    t = self.pair_tensor(j, k)
                    for a, ax in enumerate("xyz"):
                        for b, bx in enumerate("xyz"):
                            if t[a, b] != 0.0:
                                h += t[a, b] * (
                                    self.site_operator(j, ax)
                                    @ self.site_operator(k, bx)
                                )
                else:
                    d = float(self.pair_tensor(j, k)[2, 2])
                    if d == 0.0:
                        continue
                    zz = self.site_operator(j, "z") @ self.site_operator(k, "z")
                    if mode == "ising" or (
                        self.spins[j].species != self.spins[k].species
                    ):
                        h += d * zz
                    else:  # like-spin secular dipolar d/2 (3 IzIz - I.I)
                        dot = sum(
                            self.site_operator(j, ax) @ self.site_operator(k, ax)
                            for ax in "xyz"
                        )
                        h += 0.5 * d * (3.0 * zz - dot)
        return h

    def static_hamiltonian(
        self,
        down_level: int,
        options: EngineOptions,
        decoupled: bool = False,
    ) -> np.ndarray:
        """Drift Hamiltonian for the current manifold floor.

        ``decoupled`` models an ideally DD-protected window: the
        electron-nuclear coupling is averaged to the manifold mean
        c = (m_up + m_down)/2 instead of its branch-resolved value, so
        nuclei precess at their addressed frequencies while the electron
        acquires no conditional phase.
        """
        h = self.nuclear_zeeman() + self.nn_term(options.nn)
        if decoupled:
            c = 0.5 * (1 + down_level)
            if c != 0.0:
                for j in range(len(self.spins)):
                    a = self.hyperfine_vector(j, options.hyperfine)
                    for comp, axis in enumerate("xyz"):
                        if a[comp] != 0.0:
                            h += -c * a[comp] * self.site_operator(j, axis)
        else:
            h += self.hyperfine_term(down_level, options.hyperfine)
        return h

    def precession_frequencies(self, manifold: QubitManifold) -> np.ndarray:
        """|gamma_j B_z z^ - c_eta A_j| for every spin — rf dip positions."""
        out = np.empty(len(self.spins))
        for j, spin in enumerate(self.spins):
            w = np.array([0.0, 0.0, spin.gamma * self.b_z]) - (
                manifold.c_eta * spin.hyperfine
            )
            out[j] = float(np.linalg.norm(w))
        return out

    def drive_coupling(self, axis: str, species: str | None = None) -> np.ndarray:
        """sum_j gamma_j I_j-axis — what a transverse field couples to."""
        h = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for j, spin in enumerate(self.spins):
            if species is not None and spin.species != species:
                continue
            h += spin.gamma * self.site_operator(j, axis)
        return h

    def total_nuclear_z(self) -> np.ndarray:
        h = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for j in range(len(self.spins)):
            h += self.site_operator(j, "z")
        return h


@dataclass
class HamiltonianParts:
    """Pre-split pieces for a sampled (explicitly time-dependent) segment:
    H(t) = static + sum_i amplitude_i cos(omega_i (t - origin_i) + phase_i)
           * coupling_i."""

    static: np.ndarray
    couplings: list[np.ndarray] = field(default_factory=list)
    amplitudes: list[float] = field(default_factory=list)
    omegas: list[float] = field(default_factory=list)
    origins: list[float] = field(default_factory=list)
    phases: list[float] = field(default_factory=list)

    def at(self, t: float) -> np.ndarray:
        h = self.static.copy()
        for c, a, w, t0, p in zip(
            self.couplings, self.amplitudes, self.omegas, self.origins, self.phases
        ):
            h += a * np.cos(w * (t - t0) + p) * c
        return h

    def stack(self, times: np.ndarray) -> np.ndarray:
        """H at many times, shape (len(times), d, d)."""
        out = np.broadcast_to(
            self.static, (len(times),) + self.static.shape
        ).copy()
        for c, a, w, t0, p in zip(
            self.couplings, self.amplitudes, self.omegas, self.origins, self.phases
        ):
            out += (a * np.cos(w * (times - t0) + p))[:, None, None] * c
        return out

    @property
    def max_omega(self) -> float:
        return max(self.omegas) if self.omegas else 0.0
