"""Structure-of-arrays particle store and initial-condition generators.

Every scalar is a 64-bit float; global ids are 64-bit integers unique across
all ranks. The field declaration order below is the canonical order for
checkpoints, refresh payloads and bit comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .config import ConfigError, SimConfig

GAMMA = 5.0 / 3.0
REFERENCE_DENSITY = 1.0
BASE_INTERNAL_ENERGY = 1.0
HOT_SPHERE_BOOST = 100.0

# (name, is_vector) in declaration order; 'position' .. 'energy_rate'
FIELD_LAYOUT = (
    ("position", True),
    ("velocity", True),
    ("mass", False),
    ("internal_energy", False),
    ("density", False),
    ("smoothing_length", False),
    ("acceleration", True),
    ("energy_rate", False),
)

# the five datasets targeted by fault injection, in campaign order
INJECTED_DATASETS = ("position", "mass", "internal_energy", "velocity", "density")

_ATTR = {
    "position": "pos",
    "velocity": "vel",
    "mass": "mass",
    "internal_energy": "u",
    "density": "rho",
    "smoothing_length": "h",
    "acceleration": "acc",
    "energy_rate": "du",
}


@dataclass(slots=True)
class ParticleSystem:
    dim: int
    gid: np.ndarray   # (n,) int64
    pos: np.ndarray   # (n, dim)
    vel: np.ndarray   # (n, dim)
    mass: np.ndarray  # (n,)
    u: np.ndarray     # (n,) specific internal energy
    rho: np.ndarray   # (n,)
    h: np.ndarray     # (n,) smoothing length
    acc: np.ndarray   # (n, dim)
    du: np.ndarray    # (n,) energy rate

    @property
    def n(self) -> int:
        return int(self.gid.shape[0])

    def field(self, name: str) -> np.ndarray:
        return getattr(self, _ATTR[name])

    def copy(self) -> "ParticleSystem":
        return ParticleSystem(
            dim=self.dim,
            gid=self.gid.copy(),
            pos=self.pos.copy(),
            vel=self.vel.copy(),
            mass=self.mass.copy(),
            u=self.u.copy(),
            rho=self.rho.copy(),
            h=self.h.copy(),
            acc=self.acc.copy(),
            du=self.du.copy(),
        )

    def take(self, idx: np.ndarray) -> "ParticleSystem":
        return ParticleSystem(
            dim=self.dim,
            gid=self.gid[idx].copy(),
            pos=self.pos[idx].copy(),
            vel=self.vel[idx].copy(),
            mass=self.mass[idx].copy(),
            u=self.u[idx].copy(),
            rho=self.rho[idx].copy(),
            h=self.h[idx].copy(),
            acc=self.acc[idx].copy(),
            du=self.du[idx].copy(),
        )

    def validate(self) -> None:
        n = self.n
        for name, is_vec in FIELD_LAYOUT:
            arr = self.field(name)
            want = (n, self.dim) if is_vec else (n,)
            if arr.shape != want:
                raise ValueError(f"{name} shape {arr.shape} != {want}")
            if arr.dtype != np.float64:
                raise ValueError(f"{name} must be float64")
        if len(np.unique(self.gid)) != n:
            raise ValueError("global ids must be unique")
        if not (self.mass > 0).all():
            raise ValueError("mass must be positive")
        if not (self.rho > 0).all():
            raise ValueError("density must be positive")
        if not (self.h > 0).all():
            raise ValueError("smoothing length must be positive")


def initial_smoothing_length(config: SimConfig) -> float:
    """Smoothing length whose 2h support sphere holds ~target_neighbor_count
    particles at the uniform number density of the run."""
    n = config.particle_count
    ng = config.target_neighbor_count
    L = config.box_length
    if config.dimensionality == 3:
        # (4/3) pi (2h)^3 * n / L^3 = ng
        return 0.5 * (3.0 * ng * L**3 / (4.0 * np.pi * n)) ** (1.0 / 3.0)
    # pi (2h)^2 * n / L^2 = ng
    return 0.5 * L * np.sqrt(ng / (np.pi * n))


def _lattice_side(n: int, dim: int) -> int:
    side = round(n ** (1.0 / dim))
    for cand in (side - 1, side, side + 1):
        if cand > 0 and cand**dim == n:
            return cand
    raise ConfigError(
        f"particle_count {n} has no integer lattice root in {dim}D "
        f"(need a perfect {'cube' if dim == 3 else 'square'})"
    )


def _lattice_positions(n: int, dim: int, L: float) -> np.ndarray:
    side = _lattice_side(n, dim)
    spacing = L / side
    coords = (np.arange(side, dtype=np.float64) + 0.5) * spacing
    grids = np.meshgrid(*([coords] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def generate_initial_conditions(kind: str, config: SimConfig) -> ParticleSystem:
    """Build a global particle system for one of the supported workloads.

    uniform-lattice: equal masses on a regular grid, uniform internal energy.
    perturbed-lattice: lattice plus a seeded displacement of at most 0.1
        lattice spacings per component.
    hot-sphere: lattice with internal energy boosted 100x inside a sphere of
        radius L/8 around the box center, which drives an outward shock so
        corruption propagates vigorously.
    """
    config.validate()
    n, dim, L = config.particle_count, config.dimensionality, config.box_length
    pos = _lattice_positions(n, dim, L)
    side = _lattice_side(n, dim)
    spacing = L / side

    if kind == "perturbed-lattice":
        rng = np.random.default_rng(config.rng_seed)
        pos = pos + rng.uniform(-0.1, 0.1, size=pos.shape) * spacing
        if config.periodic:
            pos = np.mod(pos, L)
    elif kind not in ("uniform-lattice", "hot-sphere"):
        raise ConfigError(f"unknown initial-condition kind {kind!r}")

    u = np.full(n, BASE_INTERNAL_ENERGY)
    if kind == "hot-sphere":
        center = np.full(dim, 0.5 * L)
        inside = np.sqrt(((pos - center) ** 2).sum(axis=1)) < L / 8.0
        u = np.where(inside, BASE_INTERNAL_ENERGY * HOT_SPHERE_BOOST, u)

    mass = np.full(n, REFERENCE_DENSITY * L**dim / n)
    system = ParticleSystem(
        dim=dim,
        gid=np.arange(n, dtype=np.int64),
        pos=pos,
        vel=np.zeros((n, dim)),
        mass=mass,
        u=u,
        rho=np.full(n, REFERENCE_DENSITY),
        h=np.full(n, initial_smoothing_length(config)),
        acc=np.zeros((n, dim)),
        du=np.zeros(n),
    )
    system.validate()
    return system
