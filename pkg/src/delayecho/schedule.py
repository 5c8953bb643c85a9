"""Control schedules: timed events, DD builders, protocol assembly.

A schedule is an immutable, time-sorted collection of events on the
interval [0, duration].  Instantaneous events that share a time stamp are
applied with the stable priority

    manifold transfer < swap gate < instantaneous pulse < window edges,

i.e. a pulse coinciding with a manifold boundary acts on the *new*
manifold, and drives never straddle an instantaneous event.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .constants import CONSTANTS, TWO_PI
from .errors import DomainError, ValidationError
from .spin_system import MS0, QubitManifold

__all__ = [
    "InstantPulse",
    "RfDrive",
    "LGField",
    "SpinLock",
    "ManifoldTransfer",
    "SwapGate",
    "Illumination",
    "ControlSchedule",
    "build_cp",
    "build_axy",
    "modulation_function",
    "fourier_coefficients",
    "cp_fourier_coefficient",
    "rf_rotation_angle",
    "rf_amplitude_for_angle",
    "build_lg",
    "lg_suppresses_dipolar",
    "RfAddress",
    "DecoupledDelay",
    "DdRfDelay",
    "MemorySwapDelay",
    "NuclearCpDelay",
    "build_delayed_entanglement_echo",
    "serialize_schedule",
    "parse_schedule",
]

_PI = math.pi


# --------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class InstantPulse:
    """Instantaneous rotation of the electron qubit or of nuclear spins.

    ``axis_phase`` is the azimuth of the rotation axis in the equatorial
    plane (0 = x, pi/2 = y).  Nuclear pulses select spins either by an
    explicit index tuple or by a frequency window (all spins whose
    precession frequency lies within ``bandwidth`` of ``frequency``); with
    neither given, all nuclei are rotated.
    """

    time: float
    target: str = "electron"  # "electron" | "nuclear"
    angle: float = _PI
    axis_phase: float = 0.0
    frequency: float | None = None
    bandwidth: float = 0.0
    indices: tuple[int, ...] | None = None

    priority = 2

    def __post_init__(self) -> None:
        if self.target not in ("electron", "nuclear"):
            raise ValidationError(f"unknown pulse target {self.target!r}")
        if self.target == "electron" and (
            self.frequency is not None or self.indices is not None
        ):
            raise ValidationError("electron pulses take no spin selection")


@dataclass(frozen=True)
class RfDrive:
    """A transverse rf field window: B_x cos(w (t - start) + phase) x^."""

    start: float
    stop: float
    frequency: float  # rad/s
    amplitude: float  # tesla
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not self.stop > self.start:
            raise ValidationError("rf window must have positive duration")
        if self.frequency <= 0.0:
            raise ValidationError("rf carrier frequency must be positive")
        if self.amplitude < 0.0:
            raise ValidationError("rf amplitude must be non-negative")


@dataclass(frozen=True)
class LGField:
    """Off-resonant rf window realizing Lee-Goldburg decoupling.

    The carrier sits ``detuning`` below the species' Larmor frequency and
    the amplitude defaults to the magic-angle condition tan(gamma) =
    Rabi/detuning = sqrt(2); both can be overridden.  Resolution of the
    defaults against the static field happens in the engine.
    """

    start: float
    stop: float
    detuning: float  # rad/s
    species: str = "13C"
    amplitude: float | None = None  # tesla; None -> magic angle
    frequency: float | None = None  # rad/s; None -> gamma*B_z - detuning

    always_on_capable = True  # may straddle interaction windows and pulses

    def __post_init__(self) -> None:
        if self.stop < self.start:  # zero length is a legal no-op
            raise ValidationError("LG window must have non-negative duration")
        if self.detuning <= 0.0:
            raise ValidationError("LG detuning must be positive")


@dataclass(frozen=True)
class SpinLock:
    """Continuous microwave drive on the electron qubit at Rabi frequency ``rabi``."""

    start: float
    stop: float
    rabi: float  # rad/s
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not self.stop > self.start:
            raise ValidationError("spin-lock window must have positive duration")


@dataclass(frozen=True)
class ManifoldTransfer:
    """Switch the electron qubit's |down> level at an instant."""

    time: float
    down_level: int

    priority = 0

    def __post_init__(self) -> None:
        if self.down_level not in (0, -1):
            raise ValidationError("down_level must be 0 or -1")


@dataclass(frozen=True)
class SwapGate:
    """Instantaneous SWAP between the electron qubit and a memory spin."""

    time: float
    memory_index: int
    style: str = "ideal"

    priority = 1

    def __post_init__(self) -> None:
        if self.style != "ideal":
            raise ValidationError(f"unknown swap style {self.style!r}")


@dataclass(frozen=True)
class Illumination:
    """Optical reinitialization window (pump + dephasing rates from the model)."""

    start: float
    stop: float
    label: str = "default"

    def __post_init__(self) -> None:
        if not self.stop > self.start:
            raise ValidationError("illumination window must have positive duration")


_EVENT_TYPES = {
    cls.__name__: cls
    for cls in (
        InstantPulse,
        RfDrive,
        LGField,
        SpinLock,
        ManifoldTransfer,
        SwapGate,
        Illumination,
    )
}

_INSTANT_TYPES = (ManifoldTransfer, SwapGate, InstantPulse)
_WINDOW_TYPES = (RfDrive, LGField, SpinLock, Illumination)


def _event_time(event) -> float:
    return event.time if isinstance(event, _INSTANT_TYPES) else event.start


# --------------------------------------------------------------------------
# schedule container


@dataclass(frozen=True)
class ControlSchedule:
    """Immutable, validated event timeline."""

    events: tuple = ()
    duration: float = 0.0
    annotations: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.duration < 0.0 or not math.isfinite(self.duration):
            raise ValidationError("duration must be finite and non-negative")
        for ev in self.events:
            if not isinstance(ev, _INSTANT_TYPES + _WINDOW_TYPES):
                raise ValidationError(f"unknown event type {type(ev).__name__}")
            if isinstance(ev, _INSTANT_TYPES):
                if not 0.0 <= ev.time <= self.duration:
                    raise ValidationError(
                        f"{type(ev).__name__} at t={ev.time} outside [0, {self.duration}]"
                    )
            else:
                if not (0.0 <= ev.start and ev.stop <= self.duration + 1e-15):
                    raise ValidationError(
                        f"{type(ev).__name__} window [{ev.start}, {ev.stop}] "
                        f"outside [0, {self.duration}]"
                    )
        windows = self.annotations.get("interaction_windows")
        if self.annotations.get("protocol") == "delayed_echo" and windows:
            lengths = [b - a for a, b in windows]
            if abs(lengths[0] - lengths[-1]) > 1e-12 * max(lengths):
                raise ValidationError(
                    "delayed-echo interaction windows must have equal length"
                )

    def sorted_instants(self):
        """Instantaneous events ordered by (time, priority, insertion)."""
        tagged = [
            (ev.time, ev.priority, n, ev)
            for n, ev in enumerate(self.events)
            if isinstance(ev, _INSTANT_TYPES)
        ]
        return [t[3] for t in sorted(tagged, key=lambda t: t[:3])]

    def windows(self):
        return [ev for ev in self.events if isinstance(ev, _WINDOW_TYPES)]

    def electron_pi_times(self) -> np.ndarray:
        """Times of all electron pi pulses (validated to be pi rotations)."""
        times = []
        for ev in self.events:
            if isinstance(ev, InstantPulse) and ev.target == "electron":
                if abs(abs(ev.angle) - _PI) > 1e-9:
                    raise ValidationError(
                        "modulation function defined only for pi-pulse trains; "
                        f"found electron pulse with angle {ev.angle}"
                    )
                times.append(ev.time)
        return np.sort(np.array(times))

    def shifted(self, offset: float) -> "ControlSchedule":
        """The same schedule translated by ``offset`` in time."""
        moved = []
        for ev in self.events:
            if isinstance(ev, _INSTANT_TYPES):
                moved.append(replace(ev, time=ev.time + offset))
            else:
                moved.append(replace(ev, start=ev.start + offset, stop=ev.stop + offset))
        ann = dict(self.annotations)
        if "dd_start" in ann:
            ann["dd_start"] = ann["dd_start"] + offset
        return ControlSchedule(tuple(moved), self.duration + offset, ann)


# --------------------------------------------------------------------------
# DD builders and the modulation function


def build_cp(n_pulses: int, tau_cp: float, start: float = 0.0,
             axis_phase: float = 0.0) -> ControlSchedule:
    """Carr-Purcell train: n pi pulses at start + (k - 1/2) tau_cp.

    The DD angular frequency is pi/tau_cp (one modulation period spans two
    pulse intervals).
    """
    if n_pulses < 1:
        raise DomainError("need at least one pulse")
    if tau_cp <= 0.0:
        raise DomainError("tau_cp must be positive")
    pulses = tuple(
        InstantPulse(time=start + (k + 0.5) * tau_cp, angle=_PI, axis_phase=axis_phase)
        for k in range(n_pulses)
    )
    return ControlSchedule(
        events=pulses,
        duration=start + n_pulses * tau_cp,
        annotations={
            "sequence": "cp",
            "dd_start": start,
            "dd_period": 2.0 * tau_cp,
            "omega_dd": _PI / tau_cp,
            "n_pulses": n_pulses,
        },
    )


def cp_fourier_coefficient(k: int) -> float:
    """Closed form f_k^s = 4 sin(k pi / 2) / (k pi) of the CP modulation."""
    if k < 1:
        raise DomainError("harmonic index must be >= 1")
    return 4.0 * math.sin(k * _PI / 2.0) / (k * _PI)


def _fourier_from_flips(flips, period: float, k: int) -> tuple[float, float]:
    """(f_s, f_a) of the square modulation with the given flip times.

    ``flips`` are sorted times within [0, period); the modulation starts the
    period at +1 and toggles at each flip.  Closed form: integrate
    F(t) cos/sin(k w t) over each constant interval.
    """
    w = k * TWO_PI / period
    edges = np.concatenate([[0.0], np.asarray(flips, dtype=float), [period]])
    signs = (-1.0) ** np.arange(len(edges) - 1)
    sin_e = np.sin(w * edges)
    cos_e = np.cos(w * edges)
    f_s = (2.0 / period) * np.sum(signs * (sin_e[1:] - sin_e[:-1])) / w
    f_a = (2.0 / period) * np.sum(signs * (cos_e[:-1] - cos_e[1:])) / w
    return float(f_s), float(f_a)


def _axy_flips_in_period(u1: float, u2: float, period: float) -> np.ndarray:
    """Flip times of two symmetric 5-pulse composites per period."""
    offsets = np.array([-u2, -u1, 0.0, u1, u2])
    return np.sort(
        np.concatenate([period / 4.0 + offsets, 3.0 * period / 4.0 + offsets])
    )


def _axy_symmetric_f(u1: float, period: float, k: int) -> float:
    return _fourier_from_flips(_axy_flips_in_period(u1, 2.0 * u1, period), period, k)[0]


def build_axy(
    k_dd: int,
    omega_dd: float,
    f_s: float,
    f_a: float = 0.0,
    periods: int = 1,
    start: float = 0.0,
    symmetric: bool = True,
    solver_tol: float = 1e-12,
) -> ControlSchedule:
    """Adaptive-XY train hitting a target k-th Fourier coefficient.

    Each Carr-Purcell pulse is replaced by a symmetric five-pulse composite
    with offsets (-2u, -u, 0, +u, +2u); u is solved by scan-and-bisection so
    that the k-th symmetric coefficient matches ``f_s`` to ``solver_tol``.
    A non-zero antisymmetric target is realized by translating the whole
    train by the phase-equivalent sub-period offset (requires
    ``symmetric=False``).  Only odd harmonics are reachable: the composite
    train obeys F(t + T/2) = -F(t), so even coefficients vanish identically.
    """
    if k_dd < 1 or k_dd % 2 == 0:
        raise DomainError("k_dd must be a positive odd harmonic index")
    if omega_dd <= 0.0:
        raise DomainError("omega_dd must be positive")
    if periods < 1:
        raise DomainError("periods must be >= 1")
    if symmetric and f_a != 0.0:
        raise ValidationError("symmetric placement forces f_a = 0")

    period = TWO_PI / omega_dd
    magnitude = math.hypot(f_s, f_a)
    # u2 = 2u must stay inside the composite's own quarter period so the
    # outermost pulses do not collide with the neighbouring composite.
    u_max = period / 8.0

    grid = np.linspace(1e-9 * period, u_max * (1.0 - 1e-9), 4001)
    values = np.array([_axy_symmetric_f(u, period, k_dd) for u in grid])
    lo, hi = float(values.min()), float(values.max())

    def solve(target: float) -> float | None:
        if not lo - 1e-9 <= target <= hi + 1e-9:
            return None
        bracket = None
        for i in range(len(grid) - 1):
            g0 = values[i] - target
            g1 = values[i + 1] - target
            if g0 == 0.0:
                bracket = (grid[i], grid[i])
                break
            if g0 * g1 <= 0.0:
                bracket = (grid[i], grid[i + 1])
                break
        if bracket is None:
            return None
        a, b = bracket
        ga = _axy_symmetric_f(a, period, k_dd) - target
        for _ in range(200):
            mid = 0.5 * (a + b)
            gm = _axy_symmetric_f(mid, period, k_dd) - target
            if abs(gm) <= solver_tol:
                a = b = mid
                break
            if ga * gm <= 0.0:
                b = mid
            else:
                a, ga = mid, gm
        u1 = 0.5 * (a + b)
        if abs(_axy_symmetric_f(u1, period, k_dd) - target) > solver_tol:
            return None
        return u1

    total = periods * period
    phase = math.atan2(f_a, f_s)

    def place(u1: float, delta: float):
        base = _axy_flips_in_period(u1, 2.0 * u1, period)
        times = np.sort(
            np.concatenate(
                [(base + p * period + delta) % total for p in range(periods)]
            )
        )
        got = _fourier_from_flips(np.sort(times[times < period]), period, k_dd)
        if math.hypot(got[0] - f_s, got[1] - f_a) <= 1e-10:
            return times
        return None

    chosen = None
    if f_a == 0.0:
        # A pure symmetric target (either sign) is reachable without any
        # phase offset: the composite spacing itself spans negative values.
        u1 = solve(f_s)
        if u1 is not None:
            chosen = place(u1, 0.0)
    else:
        # Rotate the pattern into the antisymmetric quadrature.  Shifting
        # by delta rotates (f_s, f_a) by k w delta but also flips the
        # global sign whenever the shifted pattern starts on a -1 stretch,
        # so both coefficient branches and all half-period-compatible
        # offsets are tried.
        for base_sign in (1.0, -1.0):
            u1 = solve(base_sign * magnitude)
            if u1 is None:
                continue
            for m in range(2 * k_dd):
                delta = (phase + m * _PI) / (k_dd * omega_dd)
                chosen = place(u1, delta)
                if chosen is not None:
                    break
            if chosen is not None:
                break
    if chosen is None:
        raise DomainError(
            f"target (f_s, f_a) = ({f_s}, {f_a}) unreachable at harmonic "
            f"{k_dd}; symmetric coefficient range is [{lo:.6f}, {hi:.6f}]"
        )

    # Knill-style internal phases, composites alternating X and Y.
    knill = np.array([_PI / 6.0, 0.0, _PI / 2.0, 0.0, _PI / 6.0])
    pulses = []
    for n, t in enumerate(chosen):
        composite = (n // 5) % 2  # alternate X / Y composite axes
        axis = knill[n % 5] + (_PI / 2.0) * composite
        pulses.append(
            InstantPulse(time=float(start + t), angle=_PI, axis_phase=float(axis))
        )
    return ControlSchedule(
        events=tuple(pulses),
        duration=start + total,
        annotations={
            "sequence": "axy",
            "dd_start": start,
            "dd_period": period,
            "omega_dd": omega_dd,
            "k_dd": k_dd,
            "f_s": f_s,
            "f_a": f_a,
            "composite_offset": float(u1),
            "n_pulses": len(pulses),
        },
    )


def modulation_function(schedule: ControlSchedule, t) -> np.ndarray:
    """F(t) = (-1)^(number of electron pi pulses strictly before t)."""
    times = schedule.electron_pi_times()
    t = np.asarray(t, dtype=float)
    counts = np.searchsorted(times, t, side="left")
    return (-1.0) ** counts


def fourier_coefficients(schedule: ControlSchedule, k: int) -> tuple[float, float]:
    """(f_k^s, f_k^a) of a periodic pi-pulse train's modulation function.

    Requires the schedule to declare its DD period (``dd_period`` and
    ``dd_start`` annotations, as written by the builders) and checks that
    the pulse pattern actually repeats over all complete periods.
    """
    if k < 1:
        raise DomainError("harmonic index must be >= 1")
    ann = schedule.annotations
    if "dd_period" not in ann or "dd_start" not in ann:
        raise DomainError("schedule does not declare a DD period")
    period = float(ann["dd_period"])
    start = float(ann["dd_start"])
    times = schedule.electron_pi_times()
    times = times[times >= start - 1e-15] - start
    if times.size == 0:
        raise DomainError("no pi pulses after dd_start")
    n_periods = int(math.floor((schedule.duration - start) / period + 1e-9))
    if n_periods < 1:
        raise DomainError("schedule shorter than one DD period")
    tol = 1e-9 * period
    first = times[times < period - tol]
    for p in range(1, n_periods):
        chunk = times[(times >= p * period - tol) & (times < (p + 1) * period - tol)]
        if len(chunk) != len(first) or not np.allclose(
            chunk - p * period, first, atol=tol
        ):
            raise DomainError("pulse pattern is not periodic over the DD period")
    return _fourier_from_flips(first, period, k)


# --------------------------------------------------------------------------
# rf helpers


def rf_rotation_angle(amplitude: float, gamma: float, duration: float) -> float:
    """Resonant rotation angle theta = |gamma| B_x t / 2 of a linear rf drive.

    The factor 1/2 is the rotating-wave split of the linear field, so a
    full flip takes t = 2 pi / (|gamma| B_x).
    """
    if amplitude < 0.0 or duration < 0.0:
        raise DomainError("amplitude and duration must be non-negative")
    return abs(gamma) * amplitude * duration / 2.0


def rf_amplitude_for_angle(theta: float, gamma: float, duration: float) -> float:
    """Field amplitude (tesla) that rotates a resonant spin by theta."""
    if duration <= 0.0:
        raise DomainError("duration must be positive")
    if theta < 0.0:
        raise DomainError("theta must be non-negative")
    return 2.0 * theta / (abs(gamma) * duration)


def build_lg(
    start: float,
    stop: float,
    detuning: float,
    species: str = "13C",
    tan_gamma: float = math.sqrt(2.0),
) -> LGField:
    """Lee-Goldburg window with Rabi = tan_gamma * detuning (default magic angle)."""
    if tan_gamma <= 0.0:
        raise DomainError("tan_gamma must be positive")
    gamma = CONSTANTS.gamma(species)
    amplitude = 2.0 * tan_gamma * detuning / abs(gamma)
    return LGField(
        start=start, stop=stop, detuning=detuning, species=species, amplitude=amplitude
    )


def lg_suppresses_dipolar(detuning: float, coupling: float) -> bool:
    """Whether the LG effective field dominates a dipolar coupling (ratio >= 20)."""
    if detuning <= 0.0:
        raise DomainError("detuning must be positive")
    if coupling == 0.0:
        return True
    return math.sqrt(2.0) * detuning / abs(coupling) >= 20.0


# --------------------------------------------------------------------------
# delayed-entanglement-echo assembly


@dataclass(frozen=True)
class RfAddress:
    """One rf tone: carrier, resonant rotation angle, and phase."""

    frequency: float  # rad/s
    theta: float  # rad
    phase: float = 0.0
    species: str = "13C"

    def drive(self, start: float, stop: float) -> RfDrive:
        gamma = CONSTANTS.gamma(self.species)
        amplitude = rf_amplitude_for_angle(self.theta, gamma, stop - start)
        return RfDrive(
            start=start,
            stop=stop,
            frequency=self.frequency,
            amplitude=amplitude,
            phase=self.phase,
        )


@dataclass(frozen=True)
class DecoupledDelay:
    """Delay window with the electron-nuclear interaction idealized away."""

    duration: float


@dataclass(frozen=True)
class DdRfDelay:
    """Delay window protected by a Carr-Purcell train on the electron."""

    duration: float
    cp_pulses: int = 100
    cp_axis_phase: float = _PI / 2.0


@dataclass(frozen=True)
class MemorySwapDelay:
    """Delay window bracketed by SWAPs to a memory spin.

    ``illumination`` optionally gives (start, stop) offsets of an optical
    reset window inside the delay; ``relax_wait`` leaves settle time before
    the swap-back.
    """

    duration: float
    memory_index: int = -1  # -1 = last register site (the appended memory)
    illumination: tuple[float, float] | None = None
    relax_wait: float = 0.0
    style: str = "ideal"


@dataclass(frozen=True)
class NuclearCpDelay:
    """Delay window protected by a two-pulse CP train on the nuclei.

    The nuclear pi pulses sit at 1/4 and 3/4 of the window (intervals
    t/4, t/2, t/4); the interaction windows are protected by electron DD
    with ``window_dd_pulses`` pi pulses each.
    """

    duration: float
    window_dd_pulses: int = 8
    pulse_axis_phase: float = 0.0
    pulse_indices: tuple[int, ...] | None = None


def build_delayed_entanglement_echo(
    tau: float,
    delay,
    rf: tuple[RfAddress, ...] = (),
    interaction_manifold: QubitManifold = MS0,
    delay_manifold: QubitManifold | None = None,
    base_manifold: QubitManifold = MS0,
    final_pi: bool = True,
    echo_axis_phase: float = 0.0,
) -> ControlSchedule:
    """Two interaction windows of length tau separated by a delay window.

    The electron starts in ``base_manifold`` (the register's manifold);
    transfers are inserted whenever the interaction or delay windows use a
    different one.  The echo pi pulse sits at the end of the delay window
    and a closing pi pulse restores the original basis unless
    ``final_pi=False``.
    """
    if tau <= 0.0:
        raise DomainError("tau must be positive")
    t_d = float(delay.duration)
    if t_d < 0.0:
        raise DomainError("delay duration must be non-negative")
    if delay_manifold is None:
        delay_manifold = base_manifold
    if isinstance(delay, MemorySwapDelay) and delay_manifold != MS0:
        raise ValidationError(
            "memory swap runs in the (0,+1) manifold; delay_manifold must be ms0"
        )
    if rf and t_d == 0.0:
        raise ValidationError("rf addressing requires a non-zero delay window")

    t1_end = tau
    t2_start = tau + t_d
    duration = 2.0 * tau + t_d

    events: list = []
    annotations: dict = {
        "protocol": "delayed_echo",
        "tau": tau,
        "delay_kind": type(delay).__name__,
        "interaction_windows": ((0.0, t1_end), (t2_start, duration)),
        "delay_window": (t1_end, t2_start),
        "initial_manifold": base_manifold.name,
        "interaction_manifold": interaction_manifold.name,
        "delay_manifold": delay_manifold.name,
        "final_pi": final_pi,
    }

    def transfer(t: float, manifold: QubitManifold) -> None:
        events.append(ManifoldTransfer(time=t, down_level=manifold.down_level))

    if interaction_manifold != base_manifold:
        transfer(0.0, interaction_manifold)
    if delay_manifold != interaction_manifold and t_d > 0.0:
        transfer(t1_end, delay_manifold)
        transfer(t2_start, interaction_manifold)
    if interaction_manifold != base_manifold:
        transfer(duration, base_manifold)

    decoupled: list[tuple[float, float]] = []
    if t_d > 0.0:
        if isinstance(delay, DecoupledDelay):
            decoupled.append((t1_end, t2_start))
        elif isinstance(delay, DdRfDelay):
            if delay.cp_pulses < 1:
                raise ValidationError("DD-protected delay needs at least one pulse")
            cp = build_cp(
                delay.cp_pulses,
                t_d / delay.cp_pulses,
                start=t1_end,
                axis_phase=delay.cp_axis_phase,
            )
            events.extend(cp.events)
        elif isinstance(delay, MemorySwapDelay):
            events.append(
                SwapGate(time=t1_end, memory_index=delay.memory_index, style=delay.style)
            )
            if delay.illumination is not None:
                i0, i1 = delay.illumination
                if not 0.0 <= i0 < i1 <= t_d - delay.relax_wait + 1e-15:
                    raise ValidationError("illumination window outside the delay")
                events.append(Illumination(start=t1_end + i0, stop=t1_end + i1))
            events.append(
                SwapGate(time=t2_start, memory_index=delay.memory_index, style=delay.style)
            )
        elif isinstance(delay, NuclearCpDelay):
            for frac in (0.25, 0.75):
                events.append(
                    InstantPulse(
                        time=t1_end + frac * t_d,
                        target="nuclear",
                        angle=_PI,
                        axis_phase=delay.pulse_axis_phase,
                        indices=delay.pulse_indices,
                    )
                )
            if delay.window_dd_pulses >= 1:
                for w0 in (0.0, t2_start):
                    cp = build_cp(
                        delay.window_dd_pulses,
                        tau / delay.window_dd_pulses,
                        start=w0,
                        axis_phase=_PI / 2.0,
                    )
                    events.extend(cp.events)
                annotations["window_omega_dd"] = _PI / (tau / delay.window_dd_pulses)
        else:
            raise ValidationError(f"unknown delay specification {type(delay).__name__}")

        for address in rf:
            events.append(address.drive(t1_end, t2_start))
        annotations["rf"] = tuple(
            (a.frequency, a.theta, a.phase, a.species) for a in rf
        )

    events.append(
        InstantPulse(time=t2_start, target="electron", angle=_PI, axis_phase=echo_axis_phase)
    )
    if final_pi:
        events.append(
            InstantPulse(
                time=duration, target="electron", angle=_PI, axis_phase=echo_axis_phase
            )
        )
    if decoupled:
        annotations["decoupled_windows"] = tuple(decoupled)
    return ControlSchedule(tuple(events), duration, annotations)


# --------------------------------------------------------------------------
# serialization


def _plain(value):
    """Strip numpy scalar/array wrappers so repr is literal-eval friendly."""
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return tuple(_plain(v) for v in value)
    if isinstance(value, (tuple, list)):
        return tuple(_plain(v) for v in value)
    return value


def serialize_schedule(schedule: ControlSchedule) -> str:
    """Text form of a schedule; floats are written with repr so the
    serialize/parse round trip is bit identical."""
    lines = ["# delayecho schedule v1", f"duration {_plain(schedule.duration)!r}"]
    for key in sorted(schedule.annotations):
        lines.append(f"annotation {key} {_plain(schedule.annotations[key])!r}")
    for ev in schedule.events:
        parts = [type(ev).__name__]
        for f in fields(ev):
            parts.append(f"{f.name}={_plain(getattr(ev, f.name))!r}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> ControlSchedule:
    """Inverse of :func:`serialize_schedule`."""
    duration = None
    annotations: dict = {}
    events: list = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "duration":
            duration = float(ast.literal_eval(rest))
        elif head == "annotation":
            key, _, value = rest.partition(" ")
            annotations[key] = ast.literal_eval(value)
        elif head in _EVENT_TYPES:
            kwargs = {}
            for token in _split_fields(rest):
                name, _, value = token.partition("=")
                kwargs[name] = ast.literal_eval(value)
            events.append(_EVENT_TYPES[head](**kwargs))
        else:
            raise ValidationError(f"unknown schedule line {line!r}")
    if duration is None:
        raise ValidationError("schedule text lacks a duration line")
    return ControlSchedule(tuple(events), duration, annotations)


def _split_fields(rest: str) -> list[str]:
    """Split `a=1 b=(2, 3)` into tokens, respecting parentheses."""
    tokens: list[str] = []
    depth = 0
    current = []
    for ch in rest:
        if ch == " " and depth == 0:
            if current:
                tokens.append("".join(current))
                current = []
            continue
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        current.append(ch)
    if current:
        tokens.append("".join(current))
    return tokens
