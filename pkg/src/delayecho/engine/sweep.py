"""Parameter sweeps of the delayed-entanglement echo over a sampled bath.

A sweep evaluates the factorized echo signal on a grid of one protocol
parameter (rf carrier, window length, rotation angle or phase).  Points
are independent tasks; with ``threads > 1`` they run on a process pool and
are reduced in index order, so results do not depend on scheduling.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..bath import ClusterPartition, SpinBath, partition_clusters
from ..errors import DelayEchoError, ValidationError
from ..schedule import (
    ControlSchedule,
    DecoupledDelay,
    LGField,
    RfAddress,
    build_delayed_entanglement_echo,
)
from ..spin_system import MS0, QubitManifold
from .cce import MemorySpec, cce_signal
from .hamiltonian import EngineOptions
from .lindblad import LindbladModel

__all__ = ["EchoProtocol", "SweepSpec", "SpectrumResult", "run_sweep",
           "export_spectrum"]

_SWEEP_VARIABLES = (
    "rf_frequency", "tau", "theta_rf", "phi_rf", "delay_duration",
)


@dataclass(frozen=True)
class EchoProtocol:
    """A point configuration of the delayed-entanglement echo.

    ``rf_frequency``/``theta_rf``/``phi_rf`` describe a single addressed
    tone during the delay window; sweeps override one of them (or tau) per
    point.  ``delay`` is any of the delay specifications from the schedule
    module.
    """

    tau: float
    delay: object
    rf_frequency: float | None = None
    theta_rf: float = 0.0
    phi_rf: float = 0.0
    rf_species: str = "13C"
    interaction_manifold: QubitManifold = MS0
    delay_manifold: QubitManifold | None = None
    base_manifold: QubitManifold = MS0
    final_pi: bool = True
    lg_detuning: float | None = None  # switch on an always-on LG field
    lg_species: str = "13C"
    lg_amplitude: float | None = None

    def schedule(self, **overrides) -> ControlSchedule:
        delay_duration = overrides.pop("delay_duration", None)
        cfg = replace(self, **overrides) if overrides else self
        delay = cfg.delay
        if not hasattr(delay, "duration"):  # bare number = undriven window
            delay = DecoupledDelay(float(delay))
        if delay_duration is not None:
            delay = replace(delay, duration=float(delay_duration))
        rf = ()
        if cfg.theta_rf != 0.0:
            if cfg.rf_frequency is None:
                raise ValidationError(
                    "a non-zero rotation angle needs an rf carrier"
                )
            rf = (
                RfAddress(
                    frequency=cfg.rf_frequency,
                    theta=cfg.theta_rf,
                    phase=cfg.phi_rf,
                    species=cfg.rf_species,
                ),
            )
        built = build_delayed_entanglement_echo(
            cfg.tau,
            delay,
            rf=rf,
            interaction_manifold=cfg.interaction_manifold,
            delay_manifold=cfg.delay_manifold,
            base_manifold=cfg.base_manifold,
            final_pi=cfg.final_pi,
        )
        if cfg.lg_detuning is not None:
            lg = LGField(
                start=0.0,
                stop=built.duration,
                detuning=cfg.lg_detuning,
                species=cfg.lg_species,
                amplitude=cfg.lg_amplitude,
            )
            built = ControlSchedule(
                built.events + (lg,), built.duration,
                dict(built.annotations, lg_detuning=cfg.lg_detuning),
            )
        return built


@dataclass(frozen=True)
class SweepSpec:
    """Which protocol parameter to scan, and over which values."""

    variable: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.variable not in _SWEEP_VARIABLES:
            raise ValidationError(
                f"sweep variable must be one of {_SWEEP_VARIABLES}"
            )
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValidationError("sweep needs at least one value")


@dataclass
class SpectrumResult:
    """Sweep output: signal arrays plus the metadata that reproduces them."""

    variable: str
    values: np.ndarray
    l_signed: np.ndarray
    l_abs: np.ndarray
    population: np.ndarray
    failed: np.ndarray  # bool per point
    factors: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def any_failed(self) -> bool:
        return bool(np.any(self.failed))


def _evaluate_point(args):
    (bath, partition, protocol, variable, value, options, model, memory,
     electron_dim) = args
    try:
        schedule = protocol.schedule(**{variable: value})
        result = cce_signal(bath, partition, schedule, options=options,
                            model=model, memory=memory,
                            electron_dim=electron_dim)
        return (result.l_signed, result.l_abs, result.population,
                result.failed, result.factors)
    except DelayEchoError as exc:  # point-level failure: flag and continue
        return (math.nan, math.nan, math.nan, True, (str(exc),))


def run_sweep(
    bath: SpinBath,
    protocol: EchoProtocol,
    sweep: SweepSpec,
    partition: ClusterPartition | None = None,
    options: EngineOptions | None = None,
    model: LindbladModel | None = None,
    threads: int = 1,
    keep_factors: bool = False,
    meta: dict | None = None,
    memory: MemorySpec | None = None,
    electron_dim: int | None = None,
) -> SpectrumResult:
    """Evaluate the echo signal across ``sweep.values``.

    Failed points carry NaN signal values and a raised flag; the sweep
    always completes.
    """
    if partition is None:
        partition = partition_clusters(bath, max_size=3)
    options = options if options is not None else EngineOptions()
    tasks = [
        (bath, partition, protocol, sweep.variable, v, options, model, memory,
         electron_dim)
        for v in sweep.values
    ]
    if threads > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_evaluate_point, tasks, chunksize=1))
    else:
        rows = [_evaluate_point(t) for t in tasks]

    n = len(rows)
    out = SpectrumResult(
        variable=sweep.variable,
        values=np.array(sweep.values, dtype=float),
        l_signed=np.array([r[0] for r in rows], dtype=float),
        l_abs=np.array([r[1] for r in rows], dtype=float),
        population=np.array([r[2] for r in rows], dtype=float),
        failed=np.array([r[3] for r in rows], dtype=bool),
        factors=tuple(r[4] for r in rows) if keep_factors else (),
        meta=dict(meta or {}),
    )
    out.meta.setdefault("n_points", n)
    out.meta.setdefault("n_spins", len(bath))
    out.meta.setdefault("max_cluster_size", partition.max_size)
    out.meta.setdefault(
        "max_dropped_coupling", partition.max_dropped_coupling
    )
    if memory is not None:
        out.meta.setdefault("memory_species", memory.species)
        out.meta.setdefault("memory_p_up", memory.p_up)
    for key, value in sorted(bath.meta.items()):
        out.meta.setdefault(f"bath_{key}", value)
    return out


def config_digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def export_spectrum(result: SpectrumResult, path) -> None:
    """Deterministic text table: header of sorted metadata, then one row
    per point.  Reruns with identical inputs produce identical bytes."""
    lines = ["# delayecho spectrum v1", f"# variable: {result.variable}"]
    for key in sorted(result.meta):
        lines.append(f"# {key}: {result.meta[key]!r}")
    lines.append("# columns: value l_signed l_abs population failed")
    for i in range(len(result.values)):
        lines.append(
            f"{float(result.values[i])!r} {float(result.l_signed[i])!r} "
            f"{float(result.l_abs[i])!r} {float(result.population[i])!r} "
            f"{int(result.failed[i])}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
