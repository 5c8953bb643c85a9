"""TOML run configurations: strict parsing, units, and object builders.

A config file describes one run: where the bath comes from, the echo
protocol, what to sweep, the dissipation model, engine switches, and
output naming.  Parsing is schema-driven -- every key is checked against
the section it sits in and unknown keys are rejected with their dotted
path, so typos fail before any simulation starts.

Units.  Quantities may be plain numbers or strings with a unit tag:

* frequencies -- tagged values ("431 kHz", "5 MHz") are ordinary cyclic
  frequencies and are stored as angular frequencies (multiplied by 2 pi),
  matching how the literature quotes them ("2 pi x 431 kHz" is written
  as "431 kHz").  Bare numbers follow ``units.frequency_input``:
  ``"cyclic"`` (default, plain Hz, multiplied by 2 pi) or ``"angular"``
  (rad/s, taken as-is).
* times -- bare numbers are seconds; tags: s, ms, us, ns.
* magnetic fields -- bare numbers are tesla; tags: T, mT, G.
* lengths -- bare numbers are nanometres; tag: nm.
* angles -- bare numbers are radians; strings accept "deg", "rad" and
  pi-forms ("pi", "pi/2", "3pi/4", "0.5 pi").
* plain rates (optical pumping etc.) are bare numbers in 1/s.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .bath import SpinBath, generate_bath, load_bath
from .constants import CONSTANTS, TWO_PI
from .engine import EngineOptions, IlluminationRates, LindbladModel, MemorySpec
from .engine.sweep import EchoProtocol, SweepSpec, config_digest
from .errors import ConfigError
from .schedule import (
    DdRfDelay,
    DecoupledDelay,
    MemorySwapDelay,
    NuclearCpDelay,
)
from .spin_system import MS0, MSM1

__all__ = [
    "BathSection",
    "CensusSection",
    "RunConfig",
    "parse_config",
    "load_config",
]

_NUMBER_RE = re.compile(
    r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$"
)
_PI_RE = re.compile(
    r"\s*([-+]?(?:\d+\.?\d*|\.\d+)?)\s*pi\s*(?:/\s*((?:\d+\.?\d*|\.\d+)))?\s*$",
    re.IGNORECASE,
)

_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}
_FIELD_UNITS = {"t": 1.0, "mt": 1e-3, "g": 1e-4}
_LENGTH_UNITS = {"nm": 1.0}

_MANIFOLDS = {"ms0": MS0, "msm1": MSM1}

# tolerance rows the oracle table understands (defaults live in cli.py)
KNOWN_TOLERANCES = (
    "echo_identity",
    "single_spin",
    "multiplicity",
    "fourier_cp",
    "fourier_axy",
    "type_h_floor",
    "type_d_ratio",
    "gate_phase",
    "virtual_shift",
)


def _fail(where: str, message: str) -> ConfigError:
    return ConfigError(f"{where}: {message}")


def _split_tagged(raw: str, where: str) -> tuple[float, str]:
    m = _NUMBER_RE.match(raw)
    if m is None:
        raise _fail(where, f"cannot parse quantity {raw!r}")
    return float(m.group(1)), m.group(2).lower()


def _expect_table(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise _fail(where, "expected a table")
    return value


def _check_keys(section: dict, allowed, where: str) -> None:
    for key in section:
        if key not in allowed:
            raise _fail(
                f"{where}.{key}",
                f"unknown key (allowed: {', '.join(sorted(allowed))})",
            )


def _number(raw, where: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise _fail(where, f"expected a number, got {raw!r}")
    return float(raw)


def _integer(raw, where: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise _fail(where, f"expected an integer, got {raw!r}")
    return raw


def _boolean(raw, where: str) -> bool:
    if not isinstance(raw, bool):
        raise _fail(where, f"expected true/false, got {raw!r}")
    return raw


def _string(raw, where: str, choices=None) -> str:
    if not isinstance(raw, str):
        raise _fail(where, f"expected a string, got {raw!r}")
    if choices is not None and raw not in choices:
        raise _fail(where, f"must be one of {', '.join(choices)}; got {raw!r}")
    return raw


class _Units:
    """Quantity parsing under one frequency-input convention."""

    def __init__(self, angular_input: bool):
        self.angular_input = angular_input

    def frequency(self, raw, where: str) -> float:
        if isinstance(raw, str):
            value, unit = _split_tagged(raw, where)
            if unit not in _FREQ_UNITS:
                raise _fail(where, f"unknown frequency unit {unit!r}")
            return value * _FREQ_UNITS[unit] * TWO_PI
        return _number(raw, where) * (1.0 if self.angular_input else TWO_PI)

    def time(self, raw, where: str) -> float:
        if isinstance(raw, str):
            value, unit = _split_tagged(raw, where)
            if unit not in _TIME_UNITS:
                raise _fail(where, f"unknown time unit {unit!r}")
            return value * _TIME_UNITS[unit]
        return _number(raw, where)

    def magnetic_field(self, raw, where: str) -> float:
        if isinstance(raw, str):
            value, unit = _split_tagged(raw, where)
            if unit not in _FIELD_UNITS:
                raise _fail(where, f"unknown field unit {unit!r}")
            return value * _FIELD_UNITS[unit]
        return _number(raw, where)

    def length_nm(self, raw, where: str) -> float:
        if isinstance(raw, str):
            value, unit = _split_tagged(raw, where)
            if unit not in _LENGTH_UNITS:
                raise _fail(where, f"unknown length unit {unit!r}")
            return value * _LENGTH_UNITS[unit]
        return _number(raw, where)

    def angle(self, raw, where: str) -> float:
        if isinstance(raw, str):
            m = _PI_RE.match(raw)
            if m is not None:
                num = float(m.group(1)) if m.group(1) not in ("", "+", "-") else (
                    -1.0 if m.group(1) == "-" else 1.0
                )
                den = float(m.group(2)) if m.group(2) else 1.0
                return num * math.pi / den
            value, unit = _split_tagged(raw, where)
            if unit in ("deg", "degree", "degrees"):
                return math.radians(value)
            if unit in ("rad", ""):
                return value
            raise _fail(where, f"unknown angle unit {unit!r}")
        return _number(raw, where)

    def by_variable(self, variable: str, raw, where: str) -> float:
        if variable == "rf_frequency":
            return self.frequency(raw, where)
        if variable in ("tau", "delay_duration"):
            return self.time(raw, where)
        return self.angle(raw, where)


@dataclass(frozen=True)
class BathSection:
    """Where the nuclear bath comes from."""

    source: str = "generate"
    seed: int | None = None
    b_z: float = 403.0e-4
    shell_radius_nm: float = 3.0
    abundance: float = 0.011
    exclusion_radius_nm: float = 0.714
    species: str = "13C"
    path: str | None = None

    def realize(self, seed_override: int | None = None) -> SpinBath:
        if self.source == "file":
            if self.path is None:
                raise ConfigError("bath.path: required when bath.source = 'file'")
            return load_bath(self.path)
        seed = self.seed if seed_override is None else seed_override
        if seed is None:
            raise ConfigError(
                "bath.seed: required when bath.source = 'generate' "
                "(or pass --seed)"
            )
        return generate_bath(
            seed,
            b_z=self.b_z,
            shell_radius_nm=self.shell_radius_nm,
            abundance=self.abundance,
            exclusion_radius_nm=self.exclusion_radius_nm,
            species=self.species,
        )


@dataclass(frozen=True)
class CensusSection:
    """Addressable-spin census: seed farm settings."""

    samples: int
    seed: int = 1
    min_a_parallel: float = TWO_PI * 4.0e3
    resolutions: tuple[float, ...] = (TWO_PI * 500.0,)

    def seeds(self, seed_override: int | None = None) -> range:
        base = self.seed if seed_override is None else seed_override
        return range(base, base + self.samples)


@dataclass(frozen=True)
class RunConfig:
    """One validated run: bath + protocol + sweep + model + output."""

    text: str
    bath: BathSection
    protocol: EchoProtocol | None
    sweep: SweepSpec | None
    options: EngineOptions
    model: LindbladModel | None
    memory: MemorySpec | None
    census: CensusSection | None
    label: str
    max_cluster_size: int = 3
    coupling_threshold: float | None = None
    electron_dim: int | None = None
    tolerances: dict = field(default_factory=dict)
    extra_meta: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return config_digest(self.text)

    def data_filename(self) -> str:
        return f"{self.label}.dat"

    def metadata(self, seed=None) -> dict:
        meta = {
            "config_sha256": self.digest,
            "code_version": _code_version(),
            "label": self.label,
            "unitarity_tol": self.options.unitarity_tol,
            "trace_tol": self.options.trace_tol,
            "negativity_tol": self.options.negativity_tol,
        }
        if seed is not None:
            meta["seed"] = seed
        for name in sorted(self.tolerances):
            meta[f"tolerance_{name}"] = self.tolerances[name]
        meta.update(self.extra_meta)
        return meta


def _code_version() -> str:
    from . import __version__

    return f"delayecho {__version__}"


def _parse_units(raw: dict) -> _Units:
    _check_keys(raw, {"frequency_input"}, "units")
    mode = _string(
        raw.get("frequency_input", "cyclic"),
        "units.frequency_input",
        choices=("cyclic", "angular"),
    )
    return _Units(angular_input=(mode == "angular"))


def _parse_bath(raw: dict, units: _Units) -> BathSection:
    allowed = {
        "source", "seed", "b_z", "shell_radius", "abundance",
        "exclusion_radius", "species", "path",
    }
    _check_keys(raw, allowed, "bath")
    source = _string(raw.get("source", "generate"), "bath.source",
                     choices=("generate", "file"))
    if source == "file" and "path" not in raw:
        raise _fail("bath.path", "required when bath.source = 'file'")
    kwargs = {"source": source}
    if "seed" in raw:
        kwargs["seed"] = _integer(raw["seed"], "bath.seed")
    if "b_z" in raw:
        kwargs["b_z"] = units.magnetic_field(raw["b_z"], "bath.b_z")
    if "shell_radius" in raw:
        kwargs["shell_radius_nm"] = units.length_nm(
            raw["shell_radius"], "bath.shell_radius"
        )
    if "abundance" in raw:
        kwargs["abundance"] = _number(raw["abundance"], "bath.abundance")
    if "exclusion_radius" in raw:
        kwargs["exclusion_radius_nm"] = units.length_nm(
            raw["exclusion_radius"], "bath.exclusion_radius"
        )
    if "species" in raw:
        kwargs["species"] = _string(raw["species"], "bath.species")
    if "path" in raw:
        kwargs["path"] = _string(raw["path"], "bath.path")
    return BathSection(**kwargs)


def _parse_delay(raw: dict, units: _Units):
    where = "protocol.delay"
    kind = _string(raw.get("kind", "decoupled"), f"{where}.kind",
                   choices=("decoupled", "dd_rf", "memory", "nuclear_cp"))
    duration = units.time(raw.get("duration", 0.0), f"{where}.duration")
    if kind == "decoupled":
        _check_keys(raw, {"kind", "duration"}, where)
        return DecoupledDelay(duration)
    if kind == "dd_rf":
        _check_keys(raw, {"kind", "duration", "cp_pulses", "cp_axis_phase"}, where)
        kwargs = {}
        if "cp_pulses" in raw:
            kwargs["cp_pulses"] = _integer(raw["cp_pulses"], f"{where}.cp_pulses")
        if "cp_axis_phase" in raw:
            kwargs["cp_axis_phase"] = units.angle(
                raw["cp_axis_phase"], f"{where}.cp_axis_phase"
            )
        return DdRfDelay(duration, **kwargs)
    if kind == "memory":
        _check_keys(
            raw, {"kind", "duration", "illumination", "relax_wait", "style"}, where
        )
        kwargs = {}
        if "illumination" in raw:
            window = raw["illumination"]
            if not isinstance(window, list) or len(window) != 2:
                raise _fail(f"{where}.illumination", "expected [start, stop]")
            kwargs["illumination"] = (
                units.time(window[0], f"{where}.illumination[0]"),
                units.time(window[1], f"{where}.illumination[1]"),
            )
        if "relax_wait" in raw:
            kwargs["relax_wait"] = units.time(
                raw["relax_wait"], f"{where}.relax_wait"
            )
        if "style" in raw:
            kwargs["style"] = _string(raw["style"], f"{where}.style")
        return MemorySwapDelay(duration, **kwargs)
    _check_keys(
        raw,
        {"kind", "duration", "window_dd_pulses", "pulse_axis_phase",
         "pulse_indices"},
        where,
    )
    kwargs = {}
    if "window_dd_pulses" in raw:
        kwargs["window_dd_pulses"] = _integer(
            raw["window_dd_pulses"], f"{where}.window_dd_pulses"
        )
    if "pulse_axis_phase" in raw:
        kwargs["pulse_axis_phase"] = units.angle(
            raw["pulse_axis_phase"], f"{where}.pulse_axis_phase"
        )
    if "pulse_indices" in raw:
        idx = raw["pulse_indices"]
        if not isinstance(idx, list):
            raise _fail(f"{where}.pulse_indices", "expected a list of integers")
        kwargs["pulse_indices"] = tuple(
            _integer(i, f"{where}.pulse_indices[{n}]") for n, i in enumerate(idx)
        )
    return NuclearCpDelay(duration, **kwargs)


def _parse_protocol(raw: dict, units: _Units) -> EchoProtocol:
    allowed = {
        "tau", "delay", "rf_frequency", "theta_rf", "phi_rf", "rf_species",
        "interaction_manifold", "delay_manifold", "base_manifold", "final_pi",
        "lg",
    }
    _check_keys(raw, allowed, "protocol")
    if "tau" not in raw:
        raise _fail("protocol.tau", "required")
    kwargs = {
        "tau": units.time(raw["tau"], "protocol.tau"),
        "delay": _parse_delay(
            _expect_table(raw.get("delay", {}), "protocol.delay"), units
        ),
    }
    if "rf_frequency" in raw:
        kwargs["rf_frequency"] = units.frequency(
            raw["rf_frequency"], "protocol.rf_frequency"
        )
    if "theta_rf" in raw:
        kwargs["theta_rf"] = units.angle(raw["theta_rf"], "protocol.theta_rf")
    if "phi_rf" in raw:
        kwargs["phi_rf"] = units.angle(raw["phi_rf"], "protocol.phi_rf")
    if "rf_species" in raw:
        kwargs["rf_species"] = _string(raw["rf_species"], "protocol.rf_species")
    for key in ("interaction_manifold", "delay_manifold", "base_manifold"):
        if key in raw:
            name = _string(raw[key], f"protocol.{key}",
                           choices=tuple(_MANIFOLDS))
            kwargs[key] = _MANIFOLDS[name]
    if "final_pi" in raw:
        kwargs["final_pi"] = _boolean(raw["final_pi"], "protocol.final_pi")
    if "lg" in raw:
        lg = _expect_table(raw["lg"], "protocol.lg")
        _check_keys(lg, {"detuning", "species", "amplitude"}, "protocol.lg")
        if "detuning" not in lg:
            raise _fail("protocol.lg.detuning", "required")
        kwargs["lg_detuning"] = units.frequency(
            lg["detuning"], "protocol.lg.detuning"
        )
        if "species" in lg:
            kwargs["lg_species"] = _string(lg["species"], "protocol.lg.species")
        if "amplitude" in lg:
            kwargs["lg_amplitude"] = units.magnetic_field(
                lg["amplitude"], "protocol.lg.amplitude"
            )
    return EchoProtocol(**kwargs)


def _parse_sweep(raw: dict, units: _Units) -> SweepSpec:
    _check_keys(raw, {"variable", "start", "stop", "points", "values"}, "sweep")
    if "variable" not in raw:
        raise _fail("sweep.variable", "required")
    variable = _string(
        raw["variable"], "sweep.variable",
        choices=("rf_frequency", "tau", "theta_rf", "phi_rf",
                 "delay_duration"),
    )
    if "values" in raw:
        if "start" in raw or "stop" in raw or "points" in raw:
            raise _fail("sweep.values", "give either values or start/stop/points")
        entries = raw["values"]
        if not isinstance(entries, list) or not entries:
            raise _fail("sweep.values", "expected a non-empty list")
        values = tuple(
            units.by_variable(variable, v, f"sweep.values[{n}]")
            for n, v in enumerate(entries)
        )
        return SweepSpec(variable=variable, values=values)
    for key in ("start", "stop", "points"):
        if key not in raw:
            raise _fail(f"sweep.{key}", "required (or give sweep.values)")
    points = _integer(raw["points"], "sweep.points")
    if points < 1:
        raise _fail("sweep.points", "must be at least 1")
    start = units.by_variable(variable, raw["start"], "sweep.start")
    stop = units.by_variable(variable, raw["stop"], "sweep.stop")
    if points == 1:
        values = (start,)
    else:
        step = (stop - start) / (points - 1)
        values = tuple(start + i * step for i in range(points))
    return SweepSpec(variable=variable, values=values)


def _parse_model(raw: dict, units: _Units):
    allowed = {
        "t1", "illumination_fidelity", "illumination", "memory_species",
        "memory_p_up", "memory_protected",
    }
    _check_keys(raw, allowed, "model")
    t1 = units.time(raw["t1"], "model.t1") if "t1" in raw else None
    illumination = None
    if "illumination_fidelity" in raw and "illumination" in raw:
        raise _fail(
            "model.illumination",
            "give either illumination_fidelity or an illumination table",
        )
    if "illumination_fidelity" in raw:
        illumination = IlluminationRates.for_fidelity(
            _number(raw["illumination_fidelity"], "model.illumination_fidelity")
        )
    elif "illumination" in raw:
        table = _expect_table(raw["illumination"], "model.illumination")
        _check_keys(
            table,
            {"pump_rate", "exchange_rate", "dephasing_rate", "target_level"},
            "model.illumination",
        )
        kwargs = {}
        for key in ("pump_rate", "exchange_rate", "dephasing_rate"):
            if key in table:
                kwargs[key] = _number(table[key], f"model.illumination.{key}")
        if "target_level" in table:
            kwargs["target_level"] = _integer(
                table["target_level"], "model.illumination.target_level"
            )
        illumination = IlluminationRates(**kwargs)
    memory = None
    if "memory_species" in raw:
        species = _string(raw["memory_species"], "model.memory_species",
                          choices=("13C", "14N", "1H"))
        p_up = _number(raw.get("memory_p_up", 1.0), "model.memory_p_up")
        memory = MemorySpec(species=species, p_up=p_up)
    elif "memory_p_up" in raw:
        raise _fail("model.memory_p_up", "needs model.memory_species")
    protected = _boolean(
        raw.get("memory_protected", True), "model.memory_protected"
    )
    model = None
    if t1 is not None or illumination is not None:
        model = LindbladModel(
            t1=t1, illumination=illumination, memory_protected=protected
        )
    return model, memory


def _parse_engine(raw: dict, units: _Units):
    allowed = {
        "drive", "hyperfine", "nn", "sampling_fraction", "unitarity_tol",
        "trace_tol", "negativity_tol", "lindblad_substeps",
        "max_cluster_size", "coupling_threshold", "electron_dim",
    }
    _check_keys(raw, allowed, "engine")
    kwargs = {}
    for key in ("drive", "hyperfine", "nn"):
        if key in raw:
            kwargs[key] = _string(raw[key], f"engine.{key}")
    for key in ("sampling_fraction", "unitarity_tol", "trace_tol",
                "negativity_tol"):
        if key in raw:
            kwargs[key] = _number(raw[key], f"engine.{key}")
    if "lindblad_substeps" in raw:
        kwargs["lindblad_substeps"] = _integer(
            raw["lindblad_substeps"], "engine.lindblad_substeps"
        )
    try:
        options = EngineOptions(**kwargs)
    except Exception as exc:
        raise _fail("engine", str(exc)) from exc
    max_cluster = (
        _integer(raw["max_cluster_size"], "engine.max_cluster_size")
        if "max_cluster_size" in raw else 3
    )
    if max_cluster < 1:
        raise _fail("engine.max_cluster_size", "must be at least 1")
    threshold = (
        units.frequency(raw["coupling_threshold"], "engine.coupling_threshold")
        if "coupling_threshold" in raw else None
    )
    electron_dim = (
        _integer(raw["electron_dim"], "engine.electron_dim")
        if "electron_dim" in raw else None
    )
    if electron_dim not in (None, 2, 3):
        raise _fail("engine.electron_dim", "must be 2 or 3")
    return options, max_cluster, threshold, electron_dim


def _parse_census(raw: dict, units: _Units) -> CensusSection:
    allowed = {"samples", "seed", "min_a_parallel", "resolutions"}
    _check_keys(raw, allowed, "census")
    if "samples" not in raw:
        raise _fail("census.samples", "required")
    samples = _integer(raw["samples"], "census.samples")
    if samples < 1:
        raise _fail("census.samples", "must be at least 1")
    kwargs = {"samples": samples}
    if "seed" in raw:
        kwargs["seed"] = _integer(raw["seed"], "census.seed")
    if "min_a_parallel" in raw:
        kwargs["min_a_parallel"] = units.frequency(
            raw["min_a_parallel"], "census.min_a_parallel"
        )
    if "resolutions" in raw:
        entries = raw["resolutions"]
        if not isinstance(entries, list) or not entries:
            raise _fail("census.resolutions", "expected a non-empty list")
        kwargs["resolutions"] = tuple(
            units.frequency(v, f"census.resolutions[{n}]")
            for n, v in enumerate(entries)
        )
    return CensusSection(**kwargs)


def _parse_tolerances(raw: dict) -> dict:
    _check_keys(raw, set(KNOWN_TOLERANCES), "tolerances")
    return {
        key: _number(value, f"tolerances.{key}") for key, value in raw.items()
    }


def parse_config(text: str, extra_meta: dict | None = None) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    sections = {
        "units", "bath", "protocol", "sweep", "model", "engine", "census",
        "tolerances", "output",
    }
    _check_keys(data, sections, "config")
    units = _parse_units(_expect_table(data.get("units", {}), "units"))
    bath = _parse_bath(_expect_table(data.get("bath", {}), "bath"), units)
    protocol = None
    if "protocol" in data:
        protocol = _parse_protocol(
            _expect_table(data["protocol"], "protocol"), units
        )
    sweep = None
    if "sweep" in data:
        sweep = _parse_sweep(_expect_table(data["sweep"], "sweep"), units)
    model, memory = _parse_model(
        _expect_table(data.get("model", {}), "model"), units
    )
    options, max_cluster, threshold, electron_dim = _parse_engine(
        _expect_table(data.get("engine", {}), "engine"), units
    )
    census = None
    if "census" in data:
        census = _parse_census(_expect_table(data["census"], "census"), units)
    tolerances = _parse_tolerances(
        _expect_table(data.get("tolerances", {}), "tolerances")
    )
    output = _expect_table(data.get("output", {}), "output")
    _check_keys(output, {"label"}, "output")
    label = _string(output.get("label", "run"), "output.label")
    if (
        protocol is not None
        and protocol.theta_rf != 0.0
        and protocol.rf_frequency is None
        and (sweep is None or sweep.variable != "rf_frequency")
    ):
        raise _fail(
            "protocol.rf_frequency",
            "required when theta_rf is non-zero and rf_frequency is not swept",
        )
    return RunConfig(
        text=text,
        bath=bath,
        protocol=protocol,
        sweep=sweep,
        options=options,
        model=model,
        memory=memory,
        census=census,
        label=label,
        max_cluster_size=max_cluster,
        coupling_threshold=threshold,
        electron_dim=electron_dim,
        tolerances=tolerances,
        extra_meta=dict(extra_meta or {}),
    )


def load_config(path, extra_meta: dict | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), extra_meta=extra_meta)
