"""Quantum states and elementary spin operators for the evolution engine.

Basis conventions, used everywhere downstream:

* electron dim 2: index 0 = |up> (m_s = +1), index 1 = |down> (the
  manifold's lower level, m_s = 0 or -1);
* electron dim 3: indices (0, 1, 2) = (m_s = +1, 0, -1);
* nuclear spin-1/2: index 0 = |I_z = +1/2>; spin-1 like the electron.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DomainError, ValidationError
from ..spin_system import QubitManifold

__all__ = [
    "spin_operators",
    "axis_rotation",
    "embedded_qubit_rotation",
    "electron_level_index",
    "manifold_indices",
    "QuantumState",
    "electron_plus_vector",
    "thermal_state",
    "pure_product_state",
]


@lru_cache(maxsize=None)
def spin_operators(dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(S_x, S_y, S_z) for the spin with 2S+1 = dim levels, highest m first."""
    if dim < 2:
        raise DomainError("spin dimension must be >= 2")
    s = (dim - 1) / 2.0
    m = s - np.arange(dim)
    sz = np.diag(m).astype(complex)
    # raising operator in the descending-m basis sits on the superdiagonal
    ladder = np.sqrt(s * (s + 1.0) - m[1:] * (m[1:] + 1.0))
    sp = np.zeros((dim, dim), dtype=complex)
    sp[np.arange(dim - 1), np.arange(1, dim)] = ladder
    sm = sp.conj().T
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    for op in (sx, sy, sz):
        op.setflags(write=False)
    return sx, sy, sz


def axis_rotation(dim: int, angle: float, axis_phase: float = 0.0) -> np.ndarray:
    """exp(-i angle (cos(phi) S_x + sin(phi) S_y)) — a Bloch rotation by
    ``angle`` about the equatorial axis at azimuth ``axis_phase``."""
    sx, sy, _ = spin_operators(dim)
    generator = math.cos(axis_phase) * sx + math.sin(axis_phase) * sy
    vals, vecs = np.linalg.eigh(generator)
    return (vecs * np.exp(-1.0j * angle * vals)) @ vecs.conj().T


def electron_level_index(m_s: int, dim: int) -> int:
    """Position of the m_s level in the electron basis."""
    if dim == 3:
        if m_s not in (1, 0, -1):
            raise DomainError(f"no electron level m_s={m_s}")
        return 1 - m_s
    raise DomainError("level lookup by m_s needs the three-level electron")


def manifold_indices(manifold: QubitManifold, dim: int) -> tuple[int, int]:
    """(up_index, down_index) of the manifold qubit inside the electron basis."""
    if dim == 2:
        return 0, 1
    if dim == 3:
        return electron_level_index(manifold.up_level, 3), electron_level_index(
            manifold.down_level, 3
        )
    raise DomainError(f"electron dimension must be 2 or 3, got {dim}")


def embedded_qubit_rotation(
    dim: int, up_index: int, down_index: int, angle: float, axis_phase: float = 0.0
) -> np.ndarray:
    """Rotation of a two-level subspace, identity on any remaining level."""
    block = axis_rotation(2, angle, axis_phase)
    u = np.eye(dim, dtype=complex)
    idx = (up_index, down_index)
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            u[a, b] = block[i, j]
    return u


@dataclass
class QuantumState:
    """A pure vector or density matrix over (electron, n nuclei).

    ``dims`` lists the subsystem dimensions, electron first.  The data
    array is a flat vector of length prod(dims) or a square matrix.
    """

    dims: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self) -> None:
        total = int(np.prod(self.dims))
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim == 1:
            if self.data.shape != (total,):
                raise ValidationError(
                    f"vector length {self.data.shape} does not match dims {self.dims}"
                )
        elif self.data.ndim == 2:
            if self.data.shape != (total, total):
                raise ValidationError(
                    f"matrix shape {self.data.shape} does not match dims {self.dims}"
                )
        else:
            raise ValidationError("state data must be a vector or a square matrix")

    # -- structure ---------------------------------------------------------

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def copy(self) -> "QuantumState":
        return QuantumState(self.dims, self.data.copy())

    # -- checks -------------------------------------------------------------

    def defects(self) -> dict[str, float]:
        """Deviation measures from a physical state (0 = exact)."""
        if self.is_pure:
            return {"norm": abs(float(np.linalg.norm(self.data)) - 1.0)}
        rho = self.data
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        trace = abs(float(np.trace(rho).real) - 1.0)
        eigmin = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
        return {"hermiticity": herm, "trace": trace, "negativity": max(0.0, -eigmin)}

    def validate(self) -> None:
        d = self.defects()
        if self.is_pure:
            if d["norm"] > 1e-10:
                raise ValidationError(f"pure state norm defect {d['norm']:.3e}")
            return
        if d["hermiticity"] > 1e-10:
            raise ValidationError(f"density hermiticity defect {d['hermiticity']:.3e}")
        if d["trace"] > 1e-8:
            raise ValidationError(f"density trace defect {d['trace']:.3e}")
        if d["negativity"] > 1e-8:
            raise ValidationError(f"density negativity {d['negativity']:.3e}")

    # -- evolution helpers ---------------------------------------------------

    def apply_unitary(self, u: np.ndarray) -> "QuantumState":
        if self.is_pure:
            return QuantumState(self.dims, u @ self.data)
        return QuantumState(self.dims, u @ self.data @ u.conj().T)

    def reduced(self, keep: tuple[int, ...]) -> np.ndarray:
        """Partial trace down to the subsystems in ``keep`` (given order)."""
        n = len(self.dims)
        keep = tuple(keep)
        if any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
            raise ValidationError(f"bad subsystem selection {keep} for dims {self.dims}")
        rho = self.density().reshape(self.dims + self.dims)
        traced = [i for i in range(n) if i not in keep]
        for count, axis in enumerate(sorted(traced)):
            a = axis - count
            rho = np.trace(rho, axis1=a, axis2=a + n - count)
        # remaining axes are in ascending subsystem order; permute to `keep`
        order = np.argsort(np.argsort(keep))
        m = len(keep)
        rho = rho.transpose(tuple(order) + tuple(order + m))
        d = int(np.prod([self.dims[k] for k in keep]))
        return rho.reshape(d, d)

    def electron_density(self) -> np.ndarray:
        return self.reduced((0,))


def electron_plus_vector(dim: int, manifold: QubitManifold) -> np.ndarray:
    """(|up> + |down>)/sqrt(2) on the manifold qubit, in the full electron basis."""
    up, down = manifold_indices(manifold, dim)
    vec = np.zeros(dim, dtype=complex)
    vec[up] = vec[down] = 1.0 / math.sqrt(2.0)
    return vec


def thermal_state(dims: tuple[int, ...], electron_vector: np.ndarray) -> QuantumState:
    """Electron pure state tensored with maximally mixed nuclei.

    The infinite-temperature bath is the appropriate nuclear initial
    condition at desk-scale fields.
    """
    if electron_vector.shape != (dims[0],):
        raise ValidationError("electron vector does not fit the first subsystem")
    rho = np.outer(electron_vector, electron_vector.conj())
    for d in dims[1:]:
        rho = np.kron(rho, np.eye(d) / d)
    return QuantumState(tuple(dims), rho)


def pure_product_state(dims: tuple[int, ...], vectors) -> QuantumState:
    """Tensor product of per-subsystem pure vectors."""
    if len(vectors) != len(dims):
        raise ValidationError("need one vector per subsystem")
    out = np.array([1.0], dtype=complex)
    for d, v in zip(dims, vectors):
        v = np.asarray(v, dtype=complex)
        if v.shape != (d,):
            raise ValidationError(f"vector shape {v.shape} does not match dim {d}")
        out = np.kron(out, v)
    return QuantumState(tuple(dims), out)
