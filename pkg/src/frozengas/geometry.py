"""Random frozen-gas geometry in a periodic cube.

Atoms are placed uniformly in a cube of edge ``L = n_atoms**(1/3)`` so the
number density is exactly one.  With hbar = 1 as well, every energy in the
package is measured in units of (dipole moment product) x (density) and
every time in the inverse of that; no dimensioned constants appear anywhere
downstream.  Pairs interact through their nearest periodic image and the
quantisation (dipole) axis is the z axis of the box.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SingularGeometryError(ValueError):
    """Two atoms coincide, so the 1/r^3 coupling is undefined."""


def configuration_seed(master_seed: int, config_index: int) -> np.random.SeedSequence:
    """Derive the RNG stream for one configuration of an ensemble.

    Spawning off (master_seed, config_index) keeps every configuration
    reproducible in isolation: workers can draw configurations in any order,
    or a single index can be regenerated on its own, without replaying the
    rest of the ensemble.
    """
    if config_index < 0:
        raise ValueError(f"config_index must be >= 0, got {config_index}")
    return np.random.SeedSequence(master_seed, spawn_key=(config_index,))


@dataclass(frozen=True)
class AtomConfiguration:
    """A snapshot of atom positions (and optionally velocities) in the box.

    ``box_edge`` is redundant with ``n_atoms`` at unit density but is stored
    explicitly so a configuration file is self-describing.
    """

    n_atoms: int
    box_edge: float
    positions: np.ndarray
    velocities: np.ndarray | None = None
    speed: float | None = None
    seed: int | None = None

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=float)
        if pos.shape != (self.n_atoms, 3):
            raise ValueError(
                f"positions must have shape ({self.n_atoms}, 3), got {pos.shape}"
            )
        if np.any(pos < 0.0) or np.any(pos >= self.box_edge):
            raise ValueError("positions must lie in [0, box_edge)")
        if abs(self.box_edge**3 - self.n_atoms) > 1e-9 * self.n_atoms:
            raise ValueError(
                f"box_edge {self.box_edge} inconsistent with unit density for "
                f"{self.n_atoms} atoms"
            )
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if self.velocities is not None:
            vel = np.ascontiguousarray(self.velocities, dtype=float)
            if vel.shape != (self.n_atoms, 3):
                raise ValueError(
                    f"velocities must have shape ({self.n_atoms}, 3), got {vel.shape}"
                )
            if self.speed is not None:
                norms = np.linalg.norm(vel, axis=1)
                if not np.allclose(norms, self.speed, rtol=1e-10, atol=1e-12):
                    raise ValueError("velocity magnitudes do not match speed")
            vel.setflags(write=False)
            object.__setattr__(self, "velocities", vel)


def box_edge_for(n_atoms: int) -> float:
    """Cube edge giving unit number density."""
    if n_atoms < 1:
        raise ValueError(f"need at least 1 atom, got {n_atoms}")
    return float(n_atoms) ** (1.0 / 3.0)


def sample_configuration(
    n_atoms: int,
    seed: int | np.random.SeedSequence | np.random.Generator,
    speed: float | None = None,
) -> AtomConfiguration:
    """Draw an ideal-gas snapshot: positions uniform in the unit-density cube.

    If ``speed`` is given, each atom also gets a velocity of that magnitude
    with an isotropically random direction.  Positions are drawn before
    velocities, so a moving and a frozen configuration built from the same
    seed share identical geometry; paired comparisons (with/without motion)
    then see the same disorder realisation.
    """
    L = box_edge_for(n_atoms)
    rng = np.random.default_rng(seed)
    positions = rng.random((n_atoms, 3)) * L
    velocities = None
    if speed is not None:
        if speed < 0:
            raise ValueError(f"speed must be >= 0, got {speed}")
        raw = rng.normal(size=(n_atoms, 3))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        velocities = raw / norms * speed
    stored_seed = seed if isinstance(seed, int) else None
    return AtomConfiguration(
        n_atoms=n_atoms,
        box_edge=L,
        positions=positions,
        velocities=velocities,
        speed=speed,
        seed=stored_seed,
    )


def minimum_image(displacement: np.ndarray, box_edge: float) -> np.ndarray:
    """Wrap displacement vectors into the central cell, [-L/2, L/2) per axis."""
    d = np.asarray(displacement, dtype=float)
    return d - box_edge * np.floor(d / box_edge + 0.5)


def min_image_displacement(a: np.ndarray, b: np.ndarray, box_edge: float) -> np.ndarray:
    """Shortest periodic displacement from a to b (minimum-image convention)."""
    return minimum_image(np.asarray(b, dtype=float) - np.asarray(a, dtype=float), box_edge)


def pair_displacements(config: AtomConfiguration) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-image displacements for all unordered pairs i < j.

    Returns ``(index_pairs, displacements)`` where ``index_pairs`` has shape
    (n_pairs, 2) and row ordering follows np.triu_indices, i.e. (0,1), (0,2),
    ..., (1,2), ...  The displacement row k is r_j - r_i wrapped into the
    central cell.
    """
    i_idx, j_idx = np.triu_indices(config.n_atoms, k=1)
    raw = config.positions[j_idx] - config.positions[i_idx]
    disp = minimum_image(raw, config.box_edge)
    return np.stack([i_idx, j_idx], axis=1), disp


def dipolar_coupling(displacement: np.ndarray, c_d: float = 1.0) -> np.ndarray:
    """Angle-resolved dipolar coupling c_d (1 - 3 cos^2 theta) / r^3.

    ``theta`` is measured from the z axis of the box.  Accepts a single
    vector or an (..., 3) stack; raises SingularGeometryError if any
    displacement vanishes.
    """
    d = np.asarray(displacement, dtype=float)
    r2 = np.sum(d * d, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularGeometryError("coincident atoms: zero separation")
    z2 = d[..., 2] ** 2
    return c_d * (r2 - 3.0 * z2) / r2**2.5


def advance_positions(config: AtomConfiguration, dt: float) -> AtomConfiguration:
    """Ballistic update: positions move by v*dt and wrap periodically.

    Velocities are carried over unchanged (straight-line motion, no forces:
    the gas is cold enough that only the slow residual drift matters).
    """
    if config.velocities is None:
        raise ValueError("configuration has no velocities to advance")
    new_pos = (config.positions + config.velocities * dt) % config.box_edge
    # A position exactly at the upper edge can survive the modulo through
    # floating-point rounding; fold it back explicitly.
    new_pos[new_pos >= config.box_edge] -= config.box_edge
    return AtomConfiguration(
        n_atoms=config.n_atoms,
        box_edge=config.box_edge,
        positions=new_pos,
        velocities=config.velocities,
        speed=config.speed,
        seed=config.seed,
    )


def save_configuration(config: AtomConfiguration, path) -> None:
    """Write a configuration as plain text: header lines then one row per atom.

    Columns are x y z and, when velocities are present, vx vy vz.  Floats are
    written with 17 significant digits so a round trip is exact.
    """
    with open(path, "w") as fh:
        fh.write(f"# n_atoms={config.n_atoms} box_edge={config.box_edge!r}")
        if config.seed is not None:
            fh.write(f" seed={config.seed}")
        if config.speed is not None:
            fh.write(f" speed={config.speed!r}")
        fh.write("\n")
        for i in range(config.n_atoms):
            row = "{:.17g} {:.17g} {:.17g}".format(*config.positions[i])
            if config.velocities is not None:
                row += " {:.17g} {:.17g} {:.17g}".format(*config.velocities[i])
            fh.write(row + "\n")


def load_configuration(path) -> AtomConfiguration:
    """Read a configuration written by save_configuration."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("missing configuration header line")
        fields = dict(tok.split("=", 1) for tok in header[1:].split())
        rows = np.loadtxt(fh, ndmin=2)
    n_atoms = int(fields["n_atoms"])
    if rows.shape[0] != n_atoms:
        raise ValueError(f"expected {n_atoms} rows, found {rows.shape[0]}")
    velocities = rows[:, 3:6] if rows.shape[1] >= 6 else None
    return AtomConfiguration(
        n_atoms=n_atoms,
        box_edge=float(fields["box_edge"]),
        positions=rows[:, :3],
        velocities=velocities,
        speed=float(fields["speed"]) if "speed" in fields else None,
        seed=int(fields["seed"]) if "seed" in fields else None,
    )


def nearest_neighbor_distances(config: AtomConfiguration) -> np.ndarray:
    """Distance from each atom to its nearest minimum-image neighbor."""
    pairs, disp = pair_displacements(config)
    r = np.linalg.norm(disp, axis=1)
    nearest = np.full(config.n_atoms, np.inf)
    np.minimum.at(nearest, pairs[:, 0], r)
    np.minimum.at(nearest, pairs[:, 1], r)
    return nearest


def minimum_pair_distance(config: AtomConfiguration) -> float:
    """Smallest minimum-image separation over all pairs."""
    _, disp = pair_displacements(config)
    return float(np.min(np.linalg.norm(disp, axis=1)))
