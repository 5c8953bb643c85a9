"""Dissipative evolution: T1 relaxation and optical reinitialization.

Both channels act on the three-level electron (population exchange needs
all of m_s = 0, +-1), tensored with identity on the nuclei; nuclear
decoherence during illumination comes out of the hyperfine coupling to the
stochastically flipping electron rather than from ad-hoc nuclear rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import DomainError, ValidationError

__all__ = [
    "IlluminationRates",
    "LindbladModel",
    "lindblad_superoperator",
    "FixedStepLindblad",
    "illumination_steady_population",
]


@dataclass(frozen=True)
class IlluminationRates:
    """Rates (1/s) of the optical pumping model.

    ``pump_rate`` drives population from m_s = +-1 into the target level,
    ``exchange_rate`` is the residual non-selective mixing that caps the
    initialization fidelity, and ``dephasing_rate`` scrambles electron
    coherence while the light is on.
    """

    pump_rate: float = 1.0e6
    exchange_rate: float = 1.0e6 * 0.18 / 1.46
    dephasing_rate: float = 1.0e8
    target_level: int = 0  # m_s value

    def __post_init__(self) -> None:
        for name in ("pump_rate", "exchange_rate", "dephasing_rate"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be non-negative")
        if self.target_level not in (1, 0, -1):
            raise DomainError("target_level must be an m_s value")

    @classmethod
    def for_fidelity(cls, fidelity: float, pump_rate: float = 1.0e6,
                     dephasing_rate: float = 1.0e8) -> "IlluminationRates":
        """Choose the exchange rate so the steady state hits ``fidelity``."""
        if not 1.0 / 3.0 < fidelity < 1.0:
            raise DomainError("reachable steady-state fidelity is (1/3, 1)")
        ratio = (3.0 * fidelity - 1.0) / (1.0 - fidelity)  # pump / exchange
        return cls(
            pump_rate=pump_rate,
            exchange_rate=pump_rate / ratio,
            dephasing_rate=dephasing_rate,
        )


def illumination_steady_population(rates: IlluminationRates) -> float:
    """Steady-state population of the pump target under the rate equations,
    (pump + exchange) / (pump + 3 exchange)."""
    gp, gx = rates.pump_rate, rates.exchange_rate
    if gp == 0.0 and gx == 0.0:
        raise DomainError("no rates, no steady state")
    return (gp + gx) / (gp + 3.0 * gx)


@dataclass(frozen=True)
class LindbladModel:
    """Which dissipative channels the engine should include.

    ``t1`` switches on symmetric population exchange between all electron
    level pairs at rate 1/(3 T1); ``illumination`` supplies the optical
    pumping rates used inside illumination windows.  With
    ``memory_protected`` the hyperfine coupling is dropped while light is
    on (idealized protected memory); otherwise the coupling stays and the
    nuclear spins dephase through the electron jumps.
    """

    t1: float | None = None
    illumination: IlluminationRates | None = None
    memory_protected: bool = True

    def __post_init__(self) -> None:
        if self.t1 is not None and self.t1 <= 0.0:
            raise DomainError("T1 must be positive")

    @property
    def has_background(self) -> bool:
        return self.t1 is not None

    def t1_jump_rate(self) -> float:
        if self.t1 is None:
            return 0.0
        return 1.0 / (3.0 * self.t1)


def _electron_matrix_units(dim: int):
    units = {}
    for i in range(dim):
        for j in range(dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[i, j] = 1.0
            units[(i, j)] = m
    return units


def collapse_operators(model: LindbladModel, register, illuminated: bool):
    """Jump operators on the full register space (electron dim must be 3)."""
    dim = register.electron_dim
    if dim != 3:
        raise ValidationError(
            "relaxation channels exchange all three electron levels; "
            "build the register with electron_dim=3"
        )
    units = _electron_matrix_units(dim)
    ops: list[np.ndarray] = []

    def add(mat: np.ndarray, rate: float) -> None:
        if rate > 0.0:
            ops.append(math.sqrt(rate) * register.embed({0: mat}))

    if model.t1 is not None:
        g = model.t1_jump_rate()
        for i in range(dim):
            for j in range(dim):
                if i != j:
                    add(units[(i, j)], g)
    if illuminated:
        if model.illumination is None:
            raise ValidationError(
                "schedule has illumination windows but the model carries "
                "no illumination rates"
            )
        rates = model.illumination
        target = 1 - rates.target_level  # m_s -> basis index
        for j in range(dim):
            if j != target:
                add(units[(target, j)], rates.pump_rate)
        for i in range(dim):
            for j in range(dim):
                if i != j:
                    add(units[(i, j)], rates.exchange_rate)
        add(np.diag([1.0, 0.0, -1.0]).astype(complex), rates.dephasing_rate)
    return ops


def lindblad_superoperator(h: np.ndarray, collapse) -> np.ndarray:
    """Generator on row-stacked density matrices:
    vec(drho/dt) = L vec(rho)."""
    d = h.shape[0]
    eye = np.eye(d)
    gen = -1.0j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in collapse:
        cdc = c.conj().T @ c
        gen += np.kron(c, c.conj())
        gen -= 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    return gen


class FixedStepLindblad:
    """exp(L h) propagator with caching over repeated (H, jumps, h) tuples."""

    def __init__(self) -> None:
        self._cache: dict = {}

    def propagator(self, h_matrix: np.ndarray, collapse, step: float,
                   key=None) -> np.ndarray:
        if key is None:
            key = (h_matrix.tobytes(), len(collapse), float(step))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        gen = lindblad_superoperator(h_matrix, collapse)
        prop = scipy.linalg.expm(gen * step)
        self._cache[key] = prop
        return prop

    def evolve_density(
        self,
        rho: np.ndarray,
        h_matrix: np.ndarray,
        collapse,
        duration: float,
        max_step: float,
        key_base=None,
    ) -> tuple[np.ndarray, int]:
        """Apply the fixed-step propagator across ``duration``; returns the
        evolved density and the number of steps taken."""
        if duration <= 0.0:
            return rho, 0
        n_full = int(math.floor(duration / max_step))
        remainder = duration - n_full * max_step
        vec = rho.reshape(-1)
        steps = 0
        if n_full:
            prop = self.propagator(
                h_matrix, collapse, max_step,
                key=None if key_base is None else key_base + (float(max_step),),
            )
            for _ in range(n_full):
                vec = prop @ vec
            steps += n_full
        if remainder > 1e-15 * max(duration, max_step):
            prop = self.propagator(
                h_matrix, collapse, remainder,
                key=None if key_base is None else key_base + (float(remainder),),
            )
            vec = prop @ vec
            steps += 1
        d = rho.shape[0]
        return vec.reshape(d, d), steps
