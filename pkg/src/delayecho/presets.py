"""Embedded run configurations for the headline figures, at desk scale.

Every preset is a complete TOML config (the same format ``load_config``
reads from disk) shrunk to sizes a laptop finishes in minutes: smaller
bath shells, shorter delay windows, and fewer seeds than the published
curves.  All presets therefore carry ``scale = desk`` in their output
metadata; for the headline parameters (field, interaction times, rotation
angles, manifolds) they follow the originals.
"""

from __future__ import annotations

from .config import RunConfig, parse_config
from .errors import ConfigError

__all__ = ["PRESETS", "preset_names", "preset_config"]


# coherence dips vs rf carrier; (0,+1) interaction windows
_FIG2A = """\
[bath]
seed = 2
b_z = "0.467 T"
shell_radius = 2.0

[protocol]
tau = "10 us"
theta_rf = "pi"

[protocol.delay]
kind = "dd_rf"
duration = "200 us"
cp_pulses = 200

[sweep]
variable = "rf_frequency"
start = "4.96 MHz"
stop = "5.04 MHz"
points = 161

[output]
label = "fig2a"
"""

# as fig2a but a partial rotation angle and (-1,+1) interaction windows
_FIG2B = """\
[bath]
seed = 2
b_z = "0.467 T"
shell_radius = 2.0

[protocol]
tau = "13 us"
theta_rf = "pi/2"
interaction_manifold = "msm1"

[protocol.delay]
kind = "dd_rf"
duration = "200 us"
cp_pulses = 200

[sweep]
variable = "rf_frequency"
start = "4.96 MHz"
stop = "5.04 MHz"
points = 161

[output]
label = "fig2b"
"""

# memory-stored delay with background electron relaxation
_FIG3A = """\
[bath]
seed = 5
b_z = "403 G"
shell_radius = 2.2

[protocol]
tau = "20 us"
theta_rf = "pi"
interaction_manifold = "msm1"
delay_manifold = "ms0"

[protocol.delay]
kind = "memory"
duration = "200 us"

[model]
t1 = "100 ms"
memory_species = "14N"
memory_p_up = 1.0

[sweep]
variable = "rf_frequency"
start = "421 kHz"
stop = "441 kHz"
points = 81

[output]
label = "fig3a"
"""

# population modulation from nuclear pair flip-flops during storage;
# add a [protocol.lg] table (e.g. detuning = "150 kHz") to suppress it
_FIG3B = """\
[bath]
seed = 9
b_z = "0.467 T"
shell_radius = 2.0

[protocol]
tau = "50 us"
theta_rf = 0.0
interaction_manifold = "msm1"
delay_manifold = "ms0"

[protocol.delay]
kind = "memory"
duration = "100 us"

[model]
memory_species = "14N"
memory_p_up = 1.0

[sweep]
variable = "delay_duration"
start = "0.05 ms"
stop = "2 ms"
points = 40

[output]
label = "fig3b"
"""

# proton sensing with an illuminated delay window and a carbon memory
_FIG3D = """\
[bath]
seed = 3
b_z = "403 G"
shell_radius = 4.0
species = "1H"
abundance = 0.0002

[protocol]
tau = "20 us"
theta_rf = "pi"
rf_species = "1H"

[protocol.delay]
kind = "memory"
duration = "150 us"
illumination = ["10 us", "110 us"]
relax_wait = "40 us"

[model]
t1 = "1 ms"
illumination_fidelity = 0.98
memory_species = "13C"
memory_p_up = 1.0

[sweep]
variable = "rf_frequency"
start = "1.710 MHz"
stop = "1.722 MHz"
points = 61

[output]
label = "fig3d-desk"
"""

# addressable-spin census over random baths
_FIG3E = """\
[bath]
b_z = "0.467 T"
shell_radius = 3.0

[census]
samples = 50
seed = 1
min_a_parallel = "4 kHz"
resolutions = ["0.2 kHz", "0.5 kHz", "1 kHz", "2 kHz", "5 kHz"]

[output]
label = "fig3e-desk"
"""

# echo dips with (-1,+1) interaction windows at moderate field
_FIGS2 = """\
[bath]
seed = 4
b_z = "403 G"
shell_radius = 2.0

[protocol]
tau = "20 us"
theta_rf = "pi"
interaction_manifold = "msm1"

[protocol.delay]
kind = "dd_rf"
duration = "100 us"
cp_pulses = 100

[sweep]
variable = "rf_frequency"
start = "411 kHz"
stop = "451 kHz"
points = 161

[output]
label = "figS2"
"""

# electron echo decay in an interacting bath (pair flip-flops drive it)
_FIGS5 = """\
[bath]
seed = 2
b_z = "0.467 T"
shell_radius = 2.0

[protocol]
tau = "2 us"
theta_rf = 0.0

[protocol.delay]
kind = "decoupled"
duration = 0.0

[sweep]
variable = "tau"
start = "2 us"
stop = "400 us"
points = 50

[output]
label = "figS5"
"""

PRESETS: dict[str, str] = {
    "fig2a": _FIG2A,
    "fig2b": _FIG2B,
    "fig3a": _FIG3A,
    "fig3b": _FIG3B,
    "fig3d-desk": _FIG3D,
    "fig3e-desk": _FIG3E,
    "figS2": _FIGS2,
    "figS5": _FIGS5,
}


def preset_names() -> tuple[str, ...]:
    return tuple(PRESETS)


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset {name!r} (available: {', '.join(PRESETS)})"
        )
    return parse_config(
        PRESETS[name], extra_meta={"preset": name, "scale": "desk"}
    )
