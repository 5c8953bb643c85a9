"""Command-line front end: run sweeps, censuses, and oracle cross-checks.

Commands
--------
run <config>             evaluate the configured sweep, write the data table
census <config>          addressable-spin statistics over a seed farm
oracle-check [config]    engine-vs-closed-form pass/fail table
export-schedule <config> write the protocol's event timeline as text

``--preset <name>`` substitutes an embedded configuration for the config
path.  ``--seed`` overrides the bath (or census base) seed, ``--threads``
the worker count (default from the DELAYECHO_THREADS environment
variable), ``--out-dir`` the output directory.

Every output file starts with a metadata header (config content hash,
seed, code version, tolerances) sufficient to reproduce it exactly;
reruns of the same config are byte-identical.  A failed or partial run
leaves a ``<file>.failed`` sidecar next to any written output.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bath import count_addressable, generate_bath, partition_clusters
from .config import KNOWN_TOLERANCES, RunConfig, load_config
from .constants import CONSTANTS, TWO_PI
from .engine import (
    DynamicsEngine,
    EngineOptions,
    SpinRegister,
    RegisterSpin,
    electron_plus_vector,
    run_sweep,
    signed_coherence,
    thermal_state,
)
from .engine.sweep import export_spectrum
from .errors import ConfigError, DelayEchoError
from .oracles import (
    SignalParams,
    ideal_two_qubit_gates,
    entangling_gate_phase,
    single_spin_coherence,
    type_d_pair_predictions,
    type_h_pair_population,
)
from .presets import preset_config, preset_names
from .schedule import (
    DdRfDelay,
    DecoupledDelay,
    RfAddress,
    build_axy,
    build_cp,
    build_delayed_entanglement_echo,
    cp_fourier_coefficient,
    fourier_coefficients,
    serialize_schedule,
)
from .spin_system import MS0, nitrogen_virtual_shifts

THREADS_ENV = "DELAYECHO_THREADS"
# test hook: set to "a_parallel" to feed the single-spin oracle a flipped
# hyperfine sign, which must turn that row red
SIGN_FLIP_ENV = "DELAYECHO_ORACLE_SIGN_FLIP"


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DelayEchoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delayecho",
        description="delayed-entanglement-echo simulator",
    )
    parser.add_argument(
        "--version", action="version", version=f"delayecho {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_arg: bool = True) -> None:
        if config_arg:
            p.add_argument("config", nargs="?", help="TOML config path")
        p.add_argument(
            "--preset", choices=preset_names(),
            help="use an embedded figure preset instead of a config file",
        )
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument(
            "--threads", type=int, default=None,
            help=f"worker processes (default ${THREADS_ENV} or 1)",
        )
        p.add_argument(
            "--out-dir", default=".", help="directory for output files"
        )

    p_run = sub.add_parser("run", help="evaluate the configured sweep")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_census = sub.add_parser("census", help="addressable-spin seed farm")
    common(p_census)
    p_census.set_defaults(func=cmd_census)

    p_oracle = sub.add_parser(
        "oracle-check", help="engine-vs-closed-form cross checks"
    )
    common(p_oracle)
    p_oracle.set_defaults(func=cmd_oracle_check)

    p_export = sub.add_parser(
        "export-schedule", help="write the protocol timeline as text"
    )
    common(p_export)
    p_export.set_defaults(func=cmd_export_schedule)
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        value = args.threads
    else:
        value = int(os.environ.get(THREADS_ENV, "1"))
    if value < 1:
        raise ConfigError("thread count must be at least 1")
    return value


def _resolve_config(args) -> RunConfig:
    if args.preset is not None and args.config is not None:
        raise ConfigError("give either a config path or --preset, not both")
    if args.preset is not None:
        return preset_config(args.preset)
    if args.config is None:
        raise ConfigError("a config path or --preset is required")
    return load_config(args.config)


def _out_path(args, filename: str) -> Path:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / filename


def _write_guarded(path: Path, writer) -> None:
    """Write through ``writer``; on any failure leave a .failed sidecar."""
    marker = path.with_name(path.name + ".failed")
    try:
        writer(path)
    except BaseException as exc:
        try:
            marker.write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
        except OSError:
            pass
        raise
    if marker.exists():
        marker.unlink()


# -- run -----------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    if cfg.protocol is None:
        raise ConfigError("protocol: section required for 'run'")
    if cfg.sweep is None:
        raise ConfigError("sweep: section required for 'run'")
    threads = _threads(args)
    seed = args.seed if args.seed is not None else cfg.bath.seed
    bath = cfg.bath.realize(args.seed)
    partition_kwargs = {}
    if cfg.coupling_threshold is not None:
        partition_kwargs["coupling_threshold"] = cfg.coupling_threshold
    partition = partition_clusters(
        bath, max_size=cfg.max_cluster_size, **partition_kwargs
    )
    result = run_sweep(
        bath,
        cfg.protocol,
        cfg.sweep,
        partition=partition,
        options=cfg.options,
        model=cfg.model,
        memory=cfg.memory,
        electron_dim=cfg.electron_dim,
        threads=threads,
        meta=cfg.metadata(seed=seed),
    )
    path = _out_path(args, cfg.data_filename())
    _write_guarded(path, lambda p: export_spectrum(result, p))
    n_bad = int(np.sum(result.failed))
    finite = result.l_signed[~result.failed]
    print(f"run '{cfg.label}': {len(result.values)} points, "
          f"{len(bath)} bath spins, {len(partition.clusters)} clusters")
    if finite.size:
        print(f"  l_signed range [{finite.min():.6f}, {finite.max():.6f}]")
    print(f"  wrote {path}")
    if n_bad:
        marker = path.with_name(path.name + ".failed")
        marker.write_text(
            f"{n_bad} of {len(result.values)} sweep points failed "
            "(rows flagged in the table)\n",
            encoding="utf-8",
        )
        print(f"  {n_bad} points FAILED; marker at {marker}", file=sys.stderr)
        return 3
    return 0


# -- census --------------------------------------------------------------------


def _census_one(task):
    (seed, b_z, shell, abundance, exclusion, species, min_a, resolutions) = task
    bath = generate_bath(
        seed,
        b_z=b_z,
        shell_radius_nm=shell,
        abundance=abundance,
        exclusion_radius_nm=exclusion,
        species=species,
    )
    counts = [count_addressable(bath, min_a, r) for r in resolutions]
    return (seed, len(bath), counts)


def cmd_census(args) -> int:
    cfg = _resolve_config(args)
    if cfg.census is None:
        raise ConfigError("census: section required for 'census'")
    threads = _threads(args)
    census = cfg.census
    seeds = list(census.seeds(args.seed))
    tasks = [
        (
            seed, cfg.bath.b_z, cfg.bath.shell_radius_nm, cfg.bath.abundance,
            cfg.bath.exclusion_radius_nm, cfg.bath.species,
            census.min_a_parallel, census.resolutions,
        )
        for seed in seeds
    ]
    if threads > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_census_one, tasks, chunksize=1))
    else:
        rows = [_census_one(t) for t in tasks]

    counts = np.array([r[2] for r in rows], dtype=float)  # (seeds, resolutions)
    means = counts.mean(axis=0)
    stds = counts.std(axis=0)

    meta = cfg.metadata(seed=seeds[0])
    meta["samples"] = len(seeds)
    meta["min_a_parallel"] = census.min_a_parallel

    def write_table(path: Path) -> None:
        lines = ["# delayecho census v1"]
        for key in sorted(meta):
            lines.append(f"# {key}: {meta[key]!r}")
        lines.append("# columns: resolution_rad_s mean_count std_count")
        for j, res in enumerate(census.resolutions):
            lines.append(
                f"{float(res)!r} {float(means[j])!r} {float(stds[j])!r}"
            )
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    def write_seeds(path: Path) -> None:
        lines = ["# delayecho census per-seed v1"]
        for key in sorted(meta):
            lines.append(f"# {key}: {meta[key]!r}")
        lines.append("# columns: seed n_spins counts_per_resolution")
        for seed, n_spins, per_res in rows:
            tail = " ".join(str(c) for c in per_res)
            lines.append(f"{seed} {n_spins} {tail}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    table = _out_path(args, f"{cfg.label}.dat")
    per_seed = _out_path(args, f"{cfg.label}-seeds.dat")
    _write_guarded(table, write_table)
    _write_guarded(per_seed, write_seeds)

    print(f"census '{cfg.label}': {len(seeds)} seeds, "
          f"threshold {census.min_a_parallel / TWO_PI / 1e3:.3g} kHz")
    for j, res in enumerate(census.resolutions):
        print(f"  resolution {res / TWO_PI:10.1f} Hz: "
              f"mean {means[j]:7.2f}  std {stds[j]:6.2f}")
    print(f"  wrote {table}")
    print(f"  wrote {per_seed}")
    return 0


# -- oracle check --------------------------------------------------------------

_DEFAULT_TOLERANCES = {
    "echo_identity": 1e-10,
    "single_spin": 1e-6,
    "multiplicity": 1e-6,
    "fourier_cp": 1e-8,
    "fourier_axy": 1e-10,
    "type_h_floor": 1e-3,
    "type_d_ratio": 0.02,
    "gate_phase": 1e-12,
    "virtual_shift": 0.03,
}


def _single_spin_register(a_parallel: float, b_z: float = 403.0e-4,
                          n: int = 1) -> SpinRegister:
    gamma = CONSTANTS.gamma("13C")
    spins = tuple(
        RegisterSpin(
            species="13C", gamma=gamma, dim=2,
            hyperfine=np.array([0.0, 0.0, a_parallel]),
        )
        for _ in range(n)
    )
    return SpinRegister(spins, b_z=b_z, manifold=MS0, electron_dim=2,
                        constants=CONSTANTS)


def _echo_signal(register: SpinRegister, schedule,
                 options: EngineOptions | None = None) -> float:
    options = options if options is not None else EngineOptions(nn="off")
    engine = DynamicsEngine(register, options)
    state = thermal_state(
        register.dims, electron_plus_vector(register.electron_dim,
                                            register.manifold)
    )
    final, report = engine.evolve(state, schedule)
    if report.failed:
        raise DelayEchoError("; ".join(report.messages))
    return signed_coherence(final, register.manifold)


def _check_echo_identity() -> float:
    rng = np.random.default_rng(17)
    gamma = CONSTANTS.gamma("13C")
    spins = tuple(
        RegisterSpin(species="13C", gamma=gamma, dim=2,
                     hyperfine=TWO_PI * rng.uniform(-40e3, 40e3, size=3))
        for _ in range(3)
    )
    register = SpinRegister(spins, b_z=403.0e-4, manifold=MS0,
                            electron_dim=2, constants=CONSTANTS)
    schedule = build_delayed_entanglement_echo(9e-6, DecoupledDelay(23e-6))
    return abs(_echo_signal(register, schedule) - 1.0)


def _check_single_spin() -> float:
    b_z = 403.0e-4
    gamma = CONSTANTS.gamma("13C")
    worst = 0.0
    # mutation hook: corrupt the simulated hyperfine sign while the rf
    # carrier and the closed form keep the true value -- must turn red
    flip = -1.0 if os.environ.get(SIGN_FLIP_ENV) == "a_parallel" else 1.0
    for a_khz, tau, theta in ((31.0, 9e-6, math.pi),
                              (-17.0, 13e-6, 2.1),
                              (8.0, 21e-6, 0.7)):
        a_par = TWO_PI * a_khz * 1e3
        register = _single_spin_register(flip * a_par, b_z)
        omega = abs(gamma * b_z - MS0.c_eta * a_par)
        delay = DdRfDelay(40e-6, cp_pulses=800)
        schedule = build_delayed_entanglement_echo(
            tau, delay, rf=(RfAddress(frequency=omega, theta=theta),)
        )
        engine_l = _echo_signal(register, schedule)
        oracle_l = single_spin_coherence(
            SignalParams(a_parallel=a_par, eta=MS0.eta, tau=tau,
                         theta_rf=theta)
        )
        worst = max(worst, abs(engine_l - oracle_l))
    return worst


def _check_multiplicity() -> float:
    b_z = 403.0e-4
    gamma = CONSTANTS.gamma("13C")
    a_par = TWO_PI * 24.0e3
    tau, theta = 11e-6, math.pi
    omega = abs(gamma * b_z - MS0.c_eta * a_par)
    delay = DdRfDelay(40e-6, cp_pulses=200)
    schedule = build_delayed_entanglement_echo(
        tau, delay, rf=(RfAddress(frequency=omega, theta=theta),)
    )
    l_one = _echo_signal(_single_spin_register(a_par, b_z, n=1), schedule)
    l_two = _echo_signal(_single_spin_register(a_par, b_z, n=2), schedule)
    return abs(l_two - l_one**2)


def _check_fourier_cp() -> float:
    schedule = build_cp(8, 2.0e-6)
    worst = 0.0
    for k in range(1, 10):
        f_s, _ = fourier_coefficients(schedule, k)
        worst = max(worst, abs(f_s - cp_fourier_coefficient(k)))
    return worst


def _check_fourier_axy() -> float:
    worst = 0.0
    for f_s in (0.05, 0.1, 0.2):
        schedule = build_axy(1, TWO_PI / 8.0e-6, f_s)
        for k in range(1, 7):
            _, f_a = fourier_coefficients(schedule, k)
            worst = max(worst, abs(f_a))
    return worst


def _check_type_h_floor() -> float:
    worst = 0.0
    for a_khz in (3.0, 11.0, 27.0):
        for tau in np.linspace(1e-6, 150e-6, 120):
            p = type_h_pair_population(TWO_PI * a_khz * 1e3, 0.5, float(tau))
            worst = max(worst, 0.5 - p)
    return worst


def _check_type_d_splitting() -> float:
    """Engine eigen-splitting of a degenerate coupled pair vs 3|d|/2."""
    gamma = CONSTANTS.gamma("13C")
    r = 0.3  # nm, transverse bond
    a_par = TWO_PI * 9.0e3
    spins = tuple(
        RegisterSpin(species="13C", gamma=gamma, dim=2,
                     hyperfine=np.array([0.0, 0.0, a_par]),
                     position_nm=np.array([x, 1.2, 0.9]))
        for x in (0.0, r)
    )
    register = SpinRegister(spins, b_z=403.0e-4, manifold=MS0,
                            electron_dim=2, constants=CONSTANTS)
    d = register.pair_tensor(0, 1)[2, 2]
    h = register.static_hamiltonian(0, EngineOptions(), decoupled=True)
    # nuclear block at fixed electron level (decoupled drift is block equal)
    block = h[: 4, : 4]
    vals, vecs = np.linalg.eigh(block)
    drive = register.drive_coupling("x")[: 4, : 4]
    couplings = np.abs(vecs.conj().T @ drive @ vecs)
    lines = []
    for i in range(4):
        for j in range(i + 1, 4):
            if couplings[i, j] > 1e-3 * np.max(couplings):
                lines.append(abs(vals[j] - vals[i]))
    lines = sorted(lines)
    splitting = lines[-1] - lines[0]
    oracle = type_d_pair_predictions(
        d, gamma, 1e-4, a_par, MS0.eta, 10e-6
    ).splitting
    return abs(splitting - oracle) / abs(oracle)


def _check_gate_phase() -> float:
    gates = ideal_two_qubit_gates()
    worst = 0.0
    for name in ("u_zx", "u_zy", "u_zz", "u_xx", "u_yy", "iswap", "swap"):
        u = gates[name]
        worst = max(worst, float(np.max(np.abs(u.conj().T @ u - np.eye(4)))))
    a_par, eta, tau = TWO_PI * 12e3, 0.5, 7e-6
    u_plus, u_minus = entangling_gate_phase(a_par, eta, tau)
    phi = 2.0 * eta * tau * a_par
    net = u_plus @ u_minus.conj().T
    target = np.diag([np.exp(-1.0j * phi), np.exp(1.0j * phi)])
    worst = max(worst, float(np.max(np.abs(net - target))))
    return worst


def _check_virtual_shift() -> float:
    b_z = 0.467
    shifts = nitrogen_virtual_shifts(b_z)
    plus = shifts[+1]
    # the +1 nitrogen level takes no second-order shift in this sector
    leak = abs(float(plus[0, 0]))
    amplitude = abs(float(plus[1, 1]))
    expected = TWO_PI * 430.0  # rad/s
    return max(leak / expected, abs(amplitude - expected) / expected)


_ORACLE_ROWS = (
    ("echo_identity", _check_echo_identity),
    ("single_spin", _check_single_spin),
    ("multiplicity", _check_multiplicity),
    ("fourier_cp", _check_fourier_cp),
    ("fourier_axy", _check_fourier_axy),
    ("type_h_floor", _check_type_h_floor),
    ("type_d_ratio", _check_type_d_splitting),
    ("gate_phase", _check_gate_phase),
    ("virtual_shift", _check_virtual_shift),
)


def cmd_oracle_check(args) -> int:
    tolerances = dict(_DEFAULT_TOLERANCES)
    if args.config is not None or args.preset is not None:
        cfg = _resolve_config(args)
        for key, value in cfg.tolerances.items():
            tolerances[key] = value
    assert set(tolerances) == set(KNOWN_TOLERANCES)
    print(f"{'check':<16} {'error':>12} {'tolerance':>12}  status")
    failures = 0
    for name, check in _ORACLE_ROWS:
        error = check()
        tol = tolerances[name]
        ok = error <= tol
        failures += 0 if ok else 1
        print(f"{name:<16} {error:>12.3e} {tol:>12.3e}  "
              f"{'pass' if ok else 'FAIL'}")
    if failures:
        print(f"{failures} check(s) failed", file=sys.stderr)
        return 1
    return 0


# -- schedule export -----------------------------------------------------------


def cmd_export_schedule(args) -> int:
    cfg = _resolve_config(args)
    if cfg.protocol is None:
        raise ConfigError("protocol: section required for 'export-schedule'")
    overrides = {}
    if (
        cfg.sweep is not None
        and cfg.protocol.theta_rf != 0.0
        and cfg.sweep.variable == "rf_frequency"
        and cfg.protocol.rf_frequency is None
    ):
        overrides["rf_frequency"] = cfg.sweep.values[0]
    schedule = cfg.protocol.schedule(**overrides)
    text = serialize_schedule(schedule)
    meta = cfg.metadata(seed=cfg.bath.seed)
    header = "".join(f"# {k}: {meta[k]!r}\n" for k in sorted(meta))
    path = _out_path(args, f"{cfg.label}.schedule.txt")
    _write_guarded(
        path, lambda p: p.write_text(header + text, encoding="utf-8")
    )
    print(f"wrote {path} ({len(schedule.events)} events, "
          f"duration {schedule.duration * 1e6:.3f} us)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
