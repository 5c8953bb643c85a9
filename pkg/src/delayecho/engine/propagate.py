"""Piecewise-exact propagation of a register through a control schedule.

The walker splits the timeline at every instantaneous event and window
edge.  Each open segment then has a time-independent Hamiltonian — either
genuinely static, or static in the rf co-rotating frame ("rwa" drive
mode) — and is advanced by one exact matrix exponential; segments with a
bare oscillating drive ("cosine" mode) are sampled midpoint-wise at a
fixed fraction of the fastest carrier period and contracted with a
pairwise product tree.

Frame bookkeeping for "rwa" windows: entering a window costs nothing
(the frame coincides with the lab frame at the window start); leaving it
applies exp(-i w T sum_j I_jz) once, with T the full window length.
Electron pulses and manifold transfers commute with the nuclear frame
rotation and may sit anywhere; nuclear pulses and memory swaps inside an
open rwa window are rejected.

Coincident-event order: frame closures, then manifold transfers, then
swap gates, then pulses — so a pulse at a manifold boundary acts on the
new manifold, and anything at an rf-window edge acts in the lab frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..constants import CONSTANTS, TWO_PI
from ..errors import ValidationError
from ..schedule import (
    ControlSchedule,
    Illumination,
    InstantPulse,
    LGField,
    ManifoldTransfer,
    RfDrive,
    SpinLock,
    SwapGate,
)
from ..spin_system import MS0, MSM1, QubitManifold
from .hamiltonian import EngineOptions, HamiltonianParts, SpinRegister
from .lindblad import (
    FixedStepLindblad,
    LindbladModel,
    collapse_operators,
    lindblad_superoperator,
)
from .state import QuantumState, axis_rotation, embedded_qubit_rotation, manifold_indices

__all__ = ["PropagationReport", "DynamicsEngine"]

_EIGH_CHUNK = 16384  # sampled-mode block size, keeps the stacked eigh in RAM


def _ordered_product(steps: np.ndarray) -> np.ndarray:
    """Product steps[-1] @ ... @ steps[0] via a pairwise tree."""
    while steps.shape[0] > 1:
        m = steps.shape[0] // 2
        paired = steps[1 : 2 * m : 2] @ steps[0 : 2 * m : 2]
        if steps.shape[0] % 2:
            paired = np.concatenate([paired, steps[-1:]], axis=0)
        steps = paired
    return steps[0]


def _manifold_for(down_level: int) -> QubitManifold:
    return MS0 if down_level == 0 else MSM1


def _apply_split_channel(rho: np.ndarray, phi_e: np.ndarray, u_n: np.ndarray,
                         d_e: int, d_n: int) -> np.ndarray:
    """rho -> Phi_e[ (I x U_n) rho (I x U_n)^dag ] on a d_e*d_n register.

    ``phi_e`` is the electron channel as a (d_e^2, d_e^2) row-stacked map,
    ``u_n`` the nuclear unitary; the two commute so the order is free.
    """
    t = rho.reshape(d_e, d_n, d_e, d_n)
    t = np.einsum("xa,iajb,yb->ixjy", u_n, t, u_n.conj(), optimize=True)
    phi4 = phi_e.reshape(d_e, d_e, d_e, d_e)
    t = np.einsum("ijkl,kxly->ixjy", phi4, t, optimize=True)
    return t.reshape(d_e * d_n, d_e * d_n)


@dataclass
class PropagationReport:
    """Numerical health record of one evolve() call."""

    steps: int = 0
    segments: int = 0
    max_step: float = 0.0
    unitarity_defect: float = 0.0
    trace_defect: float = 0.0
    negativity: float = 0.0
    norm_defect: float = 0.0
    frame_closures: int = 0
    failed: bool = False
    messages: tuple = ()
    cluster: dict | None = None

    def note(self, message: str) -> None:
        self.messages = self.messages + (message,)

    def fail(self, message: str) -> None:
        self.failed = True
        self.note(message)


@dataclass(frozen=True)
class _Tone:
    """A resolved oscillating transverse field (rf or LG window)."""

    start: float
    stop: float
    frequency: float
    amplitude: float
    phase: float
    species: str | None  # None = drive every species with its own gamma

    @property
    def key(self):
        return (self.start, self.stop, self.frequency, self.amplitude,
                self.phase, self.species)


def _resolve_tone(event, register: SpinRegister) -> _Tone:
    if isinstance(event, RfDrive):
        return _Tone(event.start, event.stop, event.frequency,
                     event.amplitude, event.phase, None)
    # LG field: defaults derive from the static field and the magic angle
    gamma = CONSTANTS.gamma(event.species)
    frequency = event.frequency
    if frequency is None:
        frequency = abs(gamma) * register.b_z - event.detuning
    amplitude = event.amplitude
    if amplitude is None:
        amplitude = 2.0 * math.sqrt(2.0) * event.detuning / abs(gamma)
    if frequency <= 0.0:
        raise ValidationError("resolved LG carrier must be positive")
    return _Tone(event.start, event.stop, frequency, amplitude, event.phase
                 if hasattr(event, "phase") else 0.0, None)


class DynamicsEngine:
    """Evolves states of one register through control schedules."""

    def __init__(
        self,
        register: SpinRegister,
        options: EngineOptions | None = None,
        model: LindbladModel | None = None,
    ):
        self.register = register
        self.options = options if options is not None else EngineOptions()
        self.model = model
        self._eigh_cache: dict = {}
        self._unitary_cache: dict = {}
        self._lindblad = FixedStepLindblad()
        self._split_cache: dict = {}
        self._nuclear_z_diag = np.real(np.diag(register.total_nuclear_z()))

    # -- public API -----------------------------------------------------------

    def evolve(self, state: QuantumState, schedule: ControlSchedule):
        """Run ``schedule``; returns (final state, PropagationReport)."""
        if tuple(state.dims) != tuple(self.register.dims):
            raise ValidationError(
                f"state dims {state.dims} do not match register {self.register.dims}"
            )
        report = PropagationReport()
        current = state.copy()

        def apply_unitary(u: np.ndarray) -> None:
            nonlocal current
            current = current.apply_unitary(u)

        def apply_lindblad(h, collapse, duration, step, key,
                           split=None) -> None:
            nonlocal current
            if current.is_pure:
                current = QuantumState(current.dims, current.density())
            if split is not None:
                rho = _apply_split_channel(current.data, *split)
                steps = 1
            else:
                rho, steps = self._lindblad.evolve_density(
                    current.data, h, collapse, duration, step, key_base=key
                )
            current = QuantumState(current.dims, rho)
            report.steps += steps
            report.trace_defect = max(
                report.trace_defect, abs(float(np.trace(rho).real) - 1.0)
            )

        self._walk(schedule, apply_unitary, apply_lindblad, report)

        defects = current.defects()
        if current.is_pure:
            report.norm_defect = defects["norm"]
            if report.norm_defect > 10.0 * self.options.unitarity_tol * max(
                1, report.segments
            ):
                report.fail(f"norm drift {report.norm_defect:.3e}")
        else:
            report.trace_defect = max(report.trace_defect, defects["trace"])
            report.negativity = defects["negativity"]
            if report.trace_defect > self.options.trace_tol:
                report.fail(f"trace defect {report.trace_defect:.3e}")
            if report.negativity > self.options.negativity_tol:
                report.fail(f"negative population {report.negativity:.3e}")
        if report.unitarity_defect > self.options.unitarity_tol:
            report.fail(f"segment unitarity defect {report.unitarity_defect:.3e}")
        return current, report

    def unitary(self, schedule: ControlSchedule):
        """Total unitary of a dissipation-free schedule (for fidelities)."""
        report = PropagationReport()
        total = np.eye(self.register.total_dim, dtype=complex)

        def apply_unitary(u: np.ndarray) -> None:
            nonlocal total
            total = u @ total

        def apply_lindblad(*_args) -> None:
            raise ValidationError(
                "cannot express dissipative evolution as a unitary; "
                "drop the Lindblad model or the illumination windows"
            )

        self._walk(schedule, apply_unitary, apply_lindblad, report)
        return total, report

    # -- the walker ------------------------------------------------------------

    def _walk(self, schedule: ControlSchedule, apply_unitary, apply_lindblad,
              report: PropagationReport) -> None:
        opts = self.options
        reg = self.register
        declared = schedule.annotations.get("initial_manifold")
        if declared is not None and declared != reg.manifold.name:
            raise ValidationError(
                f"schedule expects initial manifold {declared!r}, register "
                f"is in {reg.manifold.name!r}"
            )

        instants: dict[float, list] = {}
        for n, ev in enumerate(schedule.events):
            if isinstance(ev, (ManifoldTransfer, SwapGate, InstantPulse)):
                instants.setdefault(ev.time, []).append((ev.priority, n, ev))
        windows = schedule.windows()
        tones = [
            _resolve_tone(w, reg) for w in windows if isinstance(w, (RfDrive, LGField))
            and w.stop > w.start
        ]
        locks = [w for w in windows if isinstance(w, SpinLock)]
        lights = [w for w in windows if isinstance(w, Illumination)]
        decoupled_spans = tuple(schedule.annotations.get("decoupled_windows", ()))

        if lights and (self.model is None or self.model.illumination is None):
            raise ValidationError(
                "illumination windows need a LindbladModel with rates"
            )
        if opts.drive == "rwa":
            self._validate_rwa(schedule, tones)

        boundaries = {0.0, schedule.duration}
        boundaries.update(instants.keys())
        for w in tones:
            boundaries.update((w.start, w.stop))
        for w in locks + lights:
            boundaries.update((w.start, w.stop))
        for a, b in decoupled_spans:
            boundaries.update((a, b))
        grid = sorted(b for b in boundaries if 0.0 <= b <= schedule.duration)

        down = reg.manifold.down_level

        for i, t0 in enumerate(grid):
            # 1. close any rwa frames ending here
            if opts.drive == "rwa":
                for tone in sorted(
                    (t for t in tones if t.stop == t0), key=lambda t: t.key
                ):
                    apply_unitary(self._frame_closure(tone))
                    report.frame_closures += 1
            # 2. instantaneous events, stable priority order
            for _prio, _n, ev in sorted(
                instants.get(t0, ()), key=lambda rec: rec[:2]
            ):
                if isinstance(ev, ManifoldTransfer):
                    u = self._transfer_unitary(down, ev.down_level)
                    if u is not None:
                        apply_unitary(u)
                    down = ev.down_level
                elif isinstance(ev, SwapGate):
                    apply_unitary(
                        self._swap_unitary(ev.memory_index, down, ev.time)
                    )
                else:
                    apply_unitary(self._pulse_unitary(ev, down))
            # 3. evolve to the next boundary
            if i + 1 >= len(grid):
                break
            t1 = grid[i + 1]
            if t1 <= t0:
                continue
            self._segment(
                t0, t1, down, tones, locks, lights, decoupled_spans,
                apply_unitary, apply_lindblad, report,
            )
            report.segments += 1

    def _validate_rwa(self, schedule: ControlSchedule, tones) -> None:
        if self.options.hyperfine != "secular" and tones:
            raise ValidationError(
                "rwa drive mode requires secular hyperfine (the co-rotating "
                "frame is not static otherwise); use drive='cosine'"
            )
        if self.options.nn == "full" and tones:
            raise ValidationError(
                "rwa drive mode cannot keep the full nuclear dipolar tensor; "
                "use nn='secular' or drive='cosine'"
            )
        for a in tones:
            for b in tones:
                if a.key < b.key and a.start < b.stop and b.start < a.stop:
                    raise ValidationError(
                        "overlapping rf tones are not representable in rwa "
                        "mode; use drive='cosine'"
                    )
        for ev in schedule.events:
            inside = lambda t: any(w.start < t < w.stop for w in tones)
            if isinstance(ev, InstantPulse) and ev.target == "nuclear":
                if inside(ev.time):
                    raise ValidationError(
                        "nuclear pulses inside an open rf window are frame-"
                        "ambiguous in rwa mode; place them outside or use "
                        "drive='cosine'"
                    )
            if isinstance(ev, SwapGate) and inside(ev.time):
                raise ValidationError(
                    "memory swaps inside an open rf window are not supported "
                    "in rwa mode"
                )

    # -- segment evolution -------------------------------------------------------

    def _segment(self, t0, t1, down, tones, locks, lights, decoupled_spans,
                 apply_unitary, apply_lindblad, report) -> None:
        opts = self.options
        delta = t1 - t0
        active_tones = [w for w in tones if w.start <= t0 and t1 <= w.stop]
        active_locks = [w for w in locks if w.start <= t0 and t1 <= w.stop]
        illuminated = any(w.start <= t0 and t1 <= w.stop for w in lights)
        decoupled = any(a <= t0 and t1 <= b for a, b in decoupled_spans)
        if len(active_locks) > 1:
            raise ValidationError("overlapping spin-lock windows")
        lock = active_locks[0] if active_locks else None

        dissipative = illuminated or (
            self.model is not None and self.model.has_background
        )

        if dissipative:
            self._lindblad_segment(
                t0, t1, down, active_tones, lock, illuminated, decoupled,
                apply_lindblad, report,
            )
            return

        if not active_tones:
            key = (down, decoupled, None, self._lock_key(lock))
            u = self._static_unitary(key, delta, lambda: self._static_h(
                down, decoupled, None, lock))
            apply_unitary(u)
            report.steps += 1
            report.max_step = max(report.max_step, delta)
            return

        if opts.drive == "rwa":
            if len(active_tones) > 1:
                raise ValidationError("overlapping rf tones in rwa mode")
            tone = active_tones[0]
            key = (down, decoupled, tone.key, self._lock_key(lock))
            u = self._static_unitary(key, delta, lambda: self._static_h(
                down, decoupled, tone, lock))
            apply_unitary(u)
            report.steps += 1
            report.max_step = max(report.max_step, delta)
            return

        # cosine mode: sample the bare oscillating fields
        parts = self._parts(down, decoupled, active_tones, lock)
        u, steps, h = self._sampled_unitary(parts, t0, t1)
        defect = float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))
        report.unitarity_defect = max(report.unitarity_defect, defect)
        apply_unitary(u)
        report.steps += steps
        report.max_step = max(report.max_step, h)

    def _lindblad_segment(self, t0, t1, down, active_tones, lock, illuminated,
                          decoupled, apply_lindblad, report) -> None:
        opts = self.options
        model = self.model
        protected = illuminated and model.memory_protected
        collapse = collapse_operators(model, self.register, illuminated)
        step = math.inf
        if model.t1 is not None:
            step = model.t1 / opts.lindblad_substeps
        if illuminated:
            light_scale = max(
                model.illumination.pump_rate,
                model.illumination.exchange_rate,
                model.illumination.dephasing_rate,
            )
            if light_scale > 0.0:
                step = min(step, 1.0 / (light_scale * 10.0))
        step = min(step, t1 - t0)

        if not active_tones or opts.drive == "rwa":
            if active_tones:
                if len(active_tones) > 1:
                    raise ValidationError("overlapping rf tones in rwa mode")
                tone = active_tones[0]
            else:
                tone = None
            h = self._static_h(down, decoupled, tone, lock,
                               drop_hyperfine=protected)
            key = (down, decoupled, None if tone is None else tone.key,
                   self._lock_key(lock), illuminated, protected)
            if protected:
                # hyperfine is off, jumps act on the electron alone: the
                # generator splits electron (x) nuclei and exp(L dt) is one
                # exact product step instead of thousands of dense ones
                split = self._split_channel(h, collapse, t1 - t0, key)
                if split is not None:
                    apply_lindblad(h, collapse, t1 - t0, t1 - t0, key, split)
                    report.max_step = max(report.max_step, t1 - t0)
                    return
            apply_lindblad(h, collapse, t1 - t0, step, key)
            report.max_step = max(report.max_step, step)
            return

        # sampled dissipative drive: step through midpoints explicitly
        parts = self._parts(down, decoupled, active_tones, lock,
                            drop_hyperfine=protected)
        h_drive = opts.sampling_fraction * TWO_PI / parts.max_omega
        step = min(step, h_drive)
        n = max(1, int(math.ceil((t1 - t0) / step)))
        h_step = (t1 - t0) / n
        for m in range(n):
            mid = t0 + (m + 0.5) * h_step
            apply_lindblad(parts.at(mid), collapse, h_step, h_step, None)
        report.max_step = max(report.max_step, h_step)

    def _split_channel(self, h, collapse, duration, key):
        """(phi_e, u_n, d_e, d_n) when the generator factorizes, else None.

        Valid when H = H_e (x) 1 + 1 (x) H_n and every jump operator is
        electron-only; both hold in protected illumination windows.  The
        whole window is then a single exact product step.
        """
        cache_key = (key, float(duration))
        hit = self._split_cache.get(cache_key)
        if hit is not None:
            return hit
        d_e = self.register.electron_dim
        d_n = self.register.total_dim // d_e
        t = h.reshape(d_e, d_n, d_e, d_n)
        h_e = np.einsum("iaja->ij", t) / d_n
        h_n = np.einsum("ixiy->xy", t) / d_e
        rec = np.kron(h_e, np.eye(d_n)) + np.kron(np.eye(d_e), h_n)
        defect = rec - h
        defect = defect - (np.trace(defect) / h.shape[0]) * np.eye(h.shape[0])
        scale = max(1.0, float(np.max(np.abs(h))))
        if float(np.max(np.abs(defect))) > 1e-9 * scale:
            return None
        jumps_e = []
        for c in collapse:
            ct = c.reshape(d_e, d_n, d_e, d_n)
            c_e = np.einsum("iaja->ij", ct) / d_n
            if float(np.max(np.abs(np.kron(c_e, np.eye(d_n)) - c))) > 1e-12:
                return None
            jumps_e.append(c_e)
        phi_e = scipy.linalg.expm(
            lindblad_superoperator(h_e, jumps_e) * duration
        )
        w, v = np.linalg.eigh(h_n)
        u_n = (v * np.exp(-1.0j * w * duration)) @ v.conj().T
        out = (phi_e, u_n, d_e, d_n)
        self._split_cache[cache_key] = out
        return out

    # -- hamiltonian assembly ----------------------------------------------------

    def _lock_key(self, lock):
        return None if lock is None else (lock.start, lock.stop, lock.rabi,
                                          lock.phase)

    def _lock_term(self, lock, down) -> np.ndarray:
        up_idx, down_idx = manifold_indices(
            _manifold_for(down), self.register.electron_dim
        )
        sx = np.zeros((self.register.electron_dim,) * 2, dtype=complex)
        sx[up_idx, down_idx] = sx[down_idx, up_idx] = 1.0
        sy = np.zeros_like(sx)
        sy[up_idx, down_idx] = -1.0j
        sy[down_idx, up_idx] = 1.0j
        term = 0.5 * lock.rabi * (
            math.cos(lock.phase) * sx + math.sin(lock.phase) * sy
        )
        return self.register.embed({0: term})

    def _static_h(self, down, decoupled, tone, lock,
                  drop_hyperfine: bool = False) -> np.ndarray:
        reg = self.register
        if drop_hyperfine:
            h = reg.nuclear_zeeman() + reg.nn_term(self.options.nn)
        else:
            h = reg.static_hamiltonian(down, self.options, decoupled)
        if tone is not None:  # rwa co-rotating frame
            h = h - tone.frequency * reg.total_nuclear_z()
            h = h + 0.5 * tone.amplitude * (
                math.cos(tone.phase) * reg.drive_coupling("x", tone.species)
                + math.sin(tone.phase) * reg.drive_coupling("y", tone.species)
            )
        if lock is not None:
            h = h + self._lock_term(lock, down)
        return h

    def _parts(self, down, decoupled, active_tones, lock,
               drop_hyperfine: bool = False) -> HamiltonianParts:
        parts = HamiltonianParts(
            static=self._static_h(down, decoupled, None, lock,
                                  drop_hyperfine=drop_hyperfine)
        )
        for tone in active_tones:
            parts.couplings.append(
                np.asarray(self.register.drive_coupling("x", tone.species))
            )
            parts.amplitudes.append(tone.amplitude)
            parts.omegas.append(tone.frequency)
            parts.origins.append(tone.start)
            parts.phases.append(tone.phase)
        return parts

    # -- propagators ----------------------------------------------------------------

    def _static_unitary(self, key, delta, builder) -> np.ndarray:
        ukey = key + (delta,)
        u = self._unitary_cache.get(ukey)
        if u is not None:
            return u
        eig = self._eigh_cache.get(key)
        if eig is None:
            h = builder()
            eig = np.linalg.eigh(h)
            self._eigh_cache[key] = eig
        vals, vecs = eig
        u = (vecs * np.exp(-1.0j * vals * delta)) @ vecs.conj().T
        u.setflags(write=False)
        self._unitary_cache[ukey] = u
        return u

    def _sampled_unitary(self, parts: HamiltonianParts, t0: float, t1: float):
        wmax = parts.max_omega
        if wmax <= 0.0:
            raise ValidationError("sampled segment without any oscillation")
        hmax = self.options.sampling_fraction * TWO_PI / wmax
        n = max(1, int(math.ceil((t1 - t0) / hmax)))
        h = (t1 - t0) / n
        dim = parts.static.shape[0]
        total = np.eye(dim, dtype=complex)
        for block_start in range(0, n, _EIGH_CHUNK):
            block = min(_EIGH_CHUNK, n - block_start)
            mids = t0 + (block_start + np.arange(block) + 0.5) * h
            stack = parts.stack(mids)
            vals, vecs = np.linalg.eigh(stack)
            phases = np.exp(-1.0j * vals * h)
            steps = np.einsum(
                "nij,nj,nkj->nik", vecs, phases, vecs.conj(), optimize=True
            )
            total = _ordered_product(steps) @ total
        return total, n, h

    # -- instantaneous operations ------------------------------------------------------

    def _frame_closure(self, tone: _Tone) -> np.ndarray:
        angle = tone.frequency * (tone.stop - tone.start)
        return np.diag(np.exp(-1.0j * angle * self._nuclear_z_diag))

    def _transfer_unitary(self, old_down: int, new_down: int):
        if old_down == new_down:
            return None
        if self.register.electron_dim == 2:
            # two-level registers relabel their floor; no amplitude moves
            return None
        a = 1 - old_down
        b = 1 - new_down
        perm = np.eye(3, dtype=complex)
        perm[a, a] = perm[b, b] = 0.0
        perm[a, b] = perm[b, a] = 1.0
        return self.register.embed({0: perm})

    def _pulse_unitary(self, ev: InstantPulse, down: int) -> np.ndarray:
        reg = self.register
        if ev.target == "electron":
            up_idx, down_idx = manifold_indices(
                _manifold_for(down), reg.electron_dim
            )
            u = embedded_qubit_rotation(
                reg.electron_dim, up_idx, down_idx, ev.angle, ev.axis_phase
            )
            return reg.embed({0: u})
        sites = self._select_sites(ev, down)
        mats = {
            1 + j: axis_rotation(reg.dims[1 + j], ev.angle, ev.axis_phase)
            for j in sites
        }
        if not mats:
            return np.eye(reg.total_dim, dtype=complex)
        return reg.embed(mats)

    def _select_sites(self, ev: InstantPulse, down: int):
        reg = self.register
        if ev.indices is not None:
            for j in ev.indices:
                if not 0 <= j < len(reg.spins):
                    raise ValidationError(f"pulse index {j} out of range")
            return tuple(ev.indices)
        if ev.frequency is None:
            return tuple(range(len(reg.spins)))
        omegas = reg.precession_frequencies(_manifold_for(down))
        return tuple(
            int(j)
            for j in np.nonzero(np.abs(omegas - ev.frequency) <= ev.bandwidth)[0]
        )

    def _swap_unitary(self, memory_index: int, down: int,
                      time: float) -> np.ndarray:
        reg = self.register
        if memory_index < 0:  # -1 = last register site, the appended memory
            memory_index += len(reg.spins)
        if not 0 <= memory_index < len(reg.spins):
            raise ValidationError(f"memory spin {memory_index} out of range")
        if reg.dims[1 + memory_index] != 2:
            raise ValidationError("memory swap requires a spin-1/2 partner")
        up_idx, down_idx = manifold_indices(
            _manifold_for(down), reg.electron_dim
        )
        qubit = (up_idx, down_idx)
        u = np.zeros((reg.total_dim, reg.total_dim), dtype=complex)
        for a in range(2):
            for b in range(2):
                e = np.zeros((reg.electron_dim,) * 2, dtype=complex)
                e[qubit[b], qubit[a]] = 1.0
                m = np.zeros((2, 2), dtype=complex)
                m[a, b] = 1.0
                u += reg.embed({0: e, 1 + memory_index: m})
        if reg.electron_dim == 3:
            spectator = ({0, 1, 2} - set(qubit)).pop()
            p = np.zeros((3, 3), dtype=complex)
            p[spectator, spectator] = 1.0
            u += reg.embed({0: p})
        # The pulse pair realizing a physical swap is phase-locked to the
        # storage transition, so the gate acts in the memory's rotating
        # frame: conjugate by the memory's free Zeeman propagator at the
        # event time, which makes a store/retrieve pair return the qubit
        # without the deterministic gamma_mem*B*t_store phase.
        z = self.register.spins[memory_index].gamma * reg.b_z * time
        frame = reg.embed(
            {1 + memory_index: np.diag(np.exp([-0.5j * z, 0.5j * z]))}
        )
        return frame @ u @ frame.conj().T
