"""Diamond-lattice nuclear spin baths: sampling, clustering, persistence.

Lattice sites are generated in cubic crystal coordinates (where the
diamond structure is an fcc lattice with a two-site basis) and stored in
NV-frame components.  Site occupancy is drawn with a counter-based
Philox generator keyed by ``(seed, attempt)``, so baths are reproducible
across platforms and independent of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import CONSTANTS, PhysicalConstants
from .errors import DomainError, ValidationError
from .spin_system import (
    MS0,
    QubitManifold,
    cubic_to_nv,
    dipolar_coupling,
    hyperfine_components,
    hyperfine_vector,
    precession_frame,
)

__all__ = [
    "LATTICE_CONSTANT_NM",
    "lattice_sites_cubic",
    "exclusion_site_count",
    "BathSpin",
    "SpinBath",
    "generate_bath",
    "coupling_matrix",
    "ClusterPartition",
    "partition_clusters",
    "count_addressable",
    "save_bath",
    "load_bath",
    "addressable_census",
]

#: Conventional diamond lattice constant used throughout, in nm.
LATTICE_CONSTANT_NM = 0.357

#: Default abundance of 13C at natural isotopic composition.
NATURAL_ABUNDANCE = 0.011

#: Default exclusion radius around the NV, nm.
DEFAULT_EXCLUSION_NM = 0.714


def lattice_sites_cubic(
    radius_nm: float, lattice_constant_nm: float = LATTICE_CONSTANT_NM
) -> np.ndarray:
    """All diamond-lattice sites with 0 < |r| < radius, cubic coordinates (nm).

    The origin is itself a lattice site (the NV) and is omitted.  Sites are
    returned sorted lexicographically by their integer coordinates (units of
    a/4), which fixes the RNG assignment order.
    """
    if radius_nm <= 0.0 or not math.isfinite(radius_nm):
        raise DomainError("radius must be positive and finite")
    a4 = lattice_constant_nm / 4.0
    n = int(math.ceil(radius_nm / a4)) + 1
    axis = np.arange(-n, n + 1)
    i, j, k = np.meshgrid(axis, axis, axis, indexing="ij")
    coords = np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1)
    parity = coords % 2
    total = coords.sum(axis=1) % 4
    even = (parity.sum(axis=1) == 0) & (total == 0)
    odd = (parity.sum(axis=1) == 3) & (total == 3)
    coords = coords[even | odd]
    r2 = (coords * coords).sum(axis=1) * a4 * a4
    inside = (r2 > 0.0) & (r2 < radius_nm * radius_nm)
    coords = coords[inside]
    order = np.lexsort((coords[:, 2], coords[:, 1], coords[:, 0]))
    return coords[order] * a4


def exclusion_site_count(
    exclusion_radius_nm: float = DEFAULT_EXCLUSION_NM,
    lattice_constant_nm: float = LATTICE_CONSTANT_NM,
) -> int:
    """Number of candidate sites strictly inside the exclusion sphere."""
    return len(lattice_sites_cubic(exclusion_radius_nm, lattice_constant_nm))


@dataclass(frozen=True)
class BathSpin:
    """One bath nucleus with its precomputed hyperfine field."""

    species: str
    position: tuple[float, float, float]  # NV frame, nm
    hyperfine: np.ndarray = field(repr=False)  # rad/s, NV frame
    a_parallel: float = 0.0
    a_perp: float = 0.0
    gamma: float = 0.0
    dimension: int = 2

    @classmethod
    def create(
        cls,
        species: str,
        position_nv_nm,
        constants: PhysicalConstants = CONSTANTS,
    ) -> "BathSpin":
        gamma = constants.gamma(species)
        vec = hyperfine_vector(position_nv_nm, gamma, constants)
        a_par, a_perp = hyperfine_components(vec)
        return cls(
            species=species,
            position=tuple(float(x) for x in np.asarray(position_nv_nm)),
            hyperfine=vec,
            a_parallel=a_par,
            a_perp=a_perp,
            gamma=gamma,
            dimension=constants.multiplicity(species),
        )


@dataclass(frozen=True)
class SpinBath:
    """A sampled nuclear environment around one NV centre."""

    spins: tuple[BathSpin, ...]
    b_z: float
    manifold: QubitManifold = MS0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.b_z <= 0.0 or not math.isfinite(self.b_z):
            raise DomainError("b_z must be positive and finite")

    def __len__(self) -> int:
        return len(self.spins)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.spins]).reshape(-1, 3)

    @property
    def a_parallel(self) -> np.ndarray:
        return np.array([s.a_parallel for s in self.spins])

    @property
    def a_perp(self) -> np.ndarray:
        return np.array([s.a_perp for s in self.spins])

    def precession(self, manifold: QubitManifold | None = None):
        """(omega, omega_hat) arrays for all spins in a manifold."""
        manifold = self.manifold if manifold is None else manifold
        omegas = np.empty(len(self.spins))
        axes = np.empty((len(self.spins), 3))
        for i, s in enumerate(self.spins):
            omegas[i], axes[i] = precession_frame(
                self.b_z, s.hyperfine, manifold, s.gamma
            )
        return omegas, axes

    def subset(self, indices) -> "SpinBath":
        spins = tuple(self.spins[i] for i in indices)
        return replace(self, spins=spins, meta=dict(self.meta, subset=tuple(indices)))


def _philox(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def generate_bath(
    seed: int,
    *,
    b_z: float,
    shell_radius_nm: float,
    abundance: float = NATURAL_ABUNDANCE,
    exclusion_radius_nm: float = DEFAULT_EXCLUSION_NM,
    manifold: QubitManifold = MS0,
    species: str = "13C",
    policy: str = "reject",
    max_attempts: int = 10_000,
    constants: PhysicalConstants = CONSTANTS,
) -> SpinBath:
    """Randomly occupy lattice sites with nuclear spins of one species.

    Every site within ``shell_radius_nm`` is occupied independently with
    probability ``abundance``.  Sites strictly inside the exclusion radius
    must stay empty: with ``policy="reject"`` the whole sample is redrawn
    (stream = attempt index) until the exclusion sphere is clear, matching
    post-selection on NV centres with a clean core; ``policy="carve"``
    simply discards occupied core sites of the first draw.
    """
    if not 0.0 <= abundance <= 1.0:
        raise DomainError("abundance must lie in [0, 1]")
    if exclusion_radius_nm < 0.0:
        raise DomainError("exclusion radius must be non-negative")
    if shell_radius_nm <= exclusion_radius_nm:
        raise DomainError("shell radius must exceed the exclusion radius")
    if policy not in ("reject", "carve"):
        raise DomainError(f"unknown occupancy policy {policy!r}")

    sites = lattice_sites_cubic(shell_radius_nm)
    r2 = (sites * sites).sum(axis=1)
    in_core = r2 < exclusion_radius_nm**2

    attempts = 0
    occupied = None
    while attempts < max_attempts:
        rng = _philox(seed, attempts)
        draw = rng.random(len(sites)) < abundance
        attempts += 1
        if policy == "carve":
            occupied = draw & ~in_core
            break
        if not draw[in_core].any():
            occupied = draw
            break
    if occupied is None:
        raise ValidationError(
            f"no exclusion-clear sample found in {max_attempts} attempts"
        )

    spins = tuple(
        BathSpin.create(species, cubic_to_nv(site), constants)
        for site in sites[occupied]
    )
    meta = {
        "seed": seed,
        "abundance": abundance,
        "shell_radius_nm": shell_radius_nm,
        "exclusion_radius_nm": exclusion_radius_nm,
        "species": species,
        "policy": policy,
        "attempts": attempts,
    }
    return SpinBath(spins=spins, b_z=b_z, manifold=manifold, meta=meta)


def coupling_matrix(
    bath: SpinBath, constants: PhysicalConstants = CONSTANTS
) -> np.ndarray:
    """Symmetric matrix of secular dipolar couplings d_jk (rad/s)."""
    n = len(bath)
    d = np.zeros((n, n))
    for j in range(n):
        for k in range(j + 1, n):
            d[j, k] = d[k, j] = dipolar_coupling(
                bath.spins[j].position,
                bath.spins[k].position,
                bath.spins[j].gamma,
                bath.spins[k].gamma,
                constants,
            )
    return d


@dataclass(frozen=True)
class DroppedCoupling:
    pair: tuple[int, int]
    strength: float
    size_limited: bool


@dataclass(frozen=True)
class ClusterPartition:
    """Disjoint clusters of bath indices plus the couplings cut between them."""

    clusters: tuple[tuple[int, ...], ...]
    dropped: tuple[DroppedCoupling, ...]
    max_size: int
    coupling_threshold: float

    @property
    def max_dropped_coupling(self) -> float:
        return max((abs(d.strength) for d in self.dropped), default=0.0)

    def validate_cover(self, n_spins: int) -> None:
        seen = sorted(i for c in self.clusters for i in c)
        if seen != list(range(n_spins)):
            raise ValidationError("clusters do not partition the bath")


def partition_clusters(
    bath: SpinBath,
    max_size: int,
    coupling_threshold: float = 2.0 * math.pi * 70.0,
    constants: PhysicalConstants = CONSTANTS,
) -> ClusterPartition:
    """Greedy agglomeration of bath spins on descending |d_jk|.

    Pairs are visited strongest first (ties broken by index); two clusters
    merge when the union stays within ``max_size``.  Every coupling left
    between clusters is recorded; those above ``coupling_threshold`` carry a
    size-limit flag rather than being silently cut.
    """
    if max_size < 1:
        raise DomainError("max_size must be at least 1")
    n = len(bath)
    d = coupling_matrix(bath, constants)
    pairs = sorted(
        ((j, k) for j in range(n) for k in range(j + 1, n)),
        key=lambda jk: (-abs(d[jk]), jk[0], jk[1]),
    )

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    size = [1] * n
    for j, k in pairs:
        a, b = find(j), find(k)
        if a != b and size[a] + size[b] <= max_size:
            parent[b] = a
            size[a] += size[b]

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    def sort_key(members: list[int]):
        internal = [abs(d[j, k]) for j in members for k in members if j < k]
        return (-max(internal, default=0.0), members[0])

    clusters = tuple(tuple(m) for m in sorted(groups.values(), key=sort_key))

    label = {}
    for ci, members in enumerate(clusters):
        for m in members:
            label[m] = ci
    dropped = tuple(
        DroppedCoupling(
            pair=(j, k),
            strength=float(d[j, k]),
            size_limited=abs(d[j, k]) > coupling_threshold,
        )
        for j in range(n)
        for k in range(j + 1, n)
        if label[j] != label[k]
    )
    return ClusterPartition(
        clusters=clusters,
        dropped=dropped,
        max_size=max_size,
        coupling_threshold=coupling_threshold,
    )


def count_addressable(
    bath: SpinBath, min_a_parallel: float, resolution: float
) -> int:
    """Spins with |A_par| above threshold and spectrally isolated.

    A spin counts when its A_parallel differs from that of *every* other
    bath spin by more than ``resolution`` (both in rad/s).
    """
    if resolution < 0.0 or min_a_parallel < 0.0:
        raise DomainError("thresholds must be non-negative")
    a_par = bath.a_parallel
    count = 0
    for i, a in enumerate(a_par):
        if abs(a) <= min_a_parallel:
            continue
        gaps = np.abs(np.delete(a_par, i) - a)
        if gaps.size == 0 or gaps.min() > resolution:
            count += 1
    return count


_BATH_HEADER = "# delayecho bath v1"


def save_bath(bath: SpinBath, path) -> None:
    """Write a bath as a text table: header metadata plus `species x y z` rows."""
    lines = [_BATH_HEADER]
    lines.append(f"# b_z_tesla: {bath.b_z!r}")
    lines.append(f"# manifold: {bath.manifold.name}")
    for key in sorted(bath.meta):
        if key == "subset":
            continue
        lines.append(f"# {key}: {bath.meta[key]!r}")
    lines.append("# columns: species x_nm y_nm z_nm")
    for s in bath.spins:
        lines.append(f"{s.species} {s.position[0]!r} {s.position[1]!r} {s.position[2]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_bath(path, constants: PhysicalConstants = CONSTANTS) -> SpinBath:
    """Read a bath written by :func:`save_bath` (bit-identical round trip)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != _BATH_HEADER:
        raise ValidationError(f"{path}: not a delayecho bath file")
    meta: dict = {}
    spins: list[BathSpin] = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        if ln.startswith("#"):
            body = ln[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                meta[key.strip()] = value.strip()
            continue
        parts = ln.split()
        if len(parts) != 4:
            raise ValidationError(f"{path}: malformed spin row {ln!r}")
        species = parts[0]
        try:
            xyz = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise ValidationError(f"{path}: bad coordinate in {ln!r}") from exc
        if not all(math.isfinite(v) for v in xyz):
            raise ValidationError(f"{path}: non-finite coordinate in {ln!r}")
        spins.append(BathSpin.create(species, xyz, constants))
    try:
        b_z = float(meta.pop("b_z_tesla"))
    except KeyError as exc:
        raise ValidationError(f"{path}: missing b_z_tesla header") from exc
    manifold = QubitManifold.from_name(meta.pop("manifold", "ms0"))
    meta.pop("columns", None)
    for key in ("seed", "attempts"):
        if key in meta:
            meta[key] = int(meta[key])
    for key in ("abundance", "shell_radius_nm", "exclusion_radius_nm"):
        if key in meta:
            meta[key] = float(meta[key])
    return SpinBath(spins=tuple(spins), b_z=b_z, manifold=manifold, meta=meta)


def addressable_census(
    seeds,
    *,
    b_z: float,
    shell_radius_nm: float,
    min_a_parallel: float,
    resolutions,
    abundance: float = NATURAL_ABUNDANCE,
    exclusion_radius_nm: float = DEFAULT_EXCLUSION_NM,
    species: str = "13C",
    constants: PhysicalConstants = CONSTANTS,
):
    """Addressable-spin counts per seed and resolution.

    Returns (rows, means): rows are (seed, n_spins, counts-per-resolution)
    in seed order; means are the per-resolution averages.
    """
    resolutions = list(resolutions)
    rows = []
    for seed in seeds:
        bath = generate_bath(
            seed,
            b_z=b_z,
            shell_radius_nm=shell_radius_nm,
            abundance=abundance,
            exclusion_radius_nm=exclusion_radius_nm,
            species=species,
            constants=constants,
        )
        counts = [count_addressable(bath, min_a_parallel, r) for r in resolutions]
        rows.append((seed, len(bath), counts))
    means = [
        float(np.mean([row[2][i] for row in rows])) if rows else 0.0
        for i in range(len(resolutions))
    ]
    return rows, means
