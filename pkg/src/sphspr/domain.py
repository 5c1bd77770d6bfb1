"""Slab domain decomposition, cell-grid neighbor search and halo containers.

The neighbor relation is the gather form: j is a neighbor of i iff the
minimum-image distance satisfies |x_i - x_j| < 2 h_i (squared-distance
comparison on both the grid path and any all-pairs check). Neighbor lists are
ordered by ascending global id so interpolation sums are bit-reproducible no
matter which rank assembles them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, SimConfig
from .kernels import SUPPORT_FACTOR


class NeighborOverflowError(RuntimeError):
    """A particle collected more neighbors than max_neighbor_count allows."""


def separation(a: np.ndarray, b: np.ndarray, box_length: float, periodic: bool) -> np.ndarray:
    """Pairwise separation a - b, minimum-image wrapped when periodic.

    This exact formula (dx - L * round(dx / L)) is the canonical convention;
    every distance in the simulator and in any independent check must use it
    so bit-level comparisons are meaningful.
    """
    dx = a - b
    if periodic:
        dx = dx - box_length * np.round(dx / box_length)
    return dx


@dataclass(slots=True)
class RankLayout:
    rank_count: int
    bounds: np.ndarray       # (Q, 2) slab intervals along the x axis, tiling [0, L]
    rank_of_gid: np.ndarray  # owning rank indexed by global id
    owned_index: list        # per rank: indices into the global arrays, block order


def decompose_domain(config: SimConfig, positions: np.ndarray, gids: np.ndarray) -> RankLayout:
    """Slab decomposition along x into contiguous position-sorted blocks.

    Ranks own ceil(n/Q) or floor(n/Q) particles each; ties in x are broken by
    global id so the assignment is a pure function of (positions, gids, Q).
    """
    n = positions.shape[0]
    q_count = config.rank_count
    if n == 0:
        raise ConfigError("cannot decompose an empty particle set")
    if q_count > n:
        raise ConfigError(f"rank_count {q_count} exceeds particle count {n}")
    L = config.box_length
    if not ((positions >= 0).all() and (positions <= L).all()):
        raise ConfigError("positions must lie inside the box")
    if sorted(gids.tolist()) != list(range(n)):
        raise ConfigError("global ids must be a permutation of 0..n-1")

    order = np.lexsort((gids, positions[:, 0]))
    base, extra = divmod(n, q_count)
    counts = np.full(q_count, base, dtype=np.int64)
    counts[:extra] += 1
    offsets = np.concatenate([[0], np.cumsum(counts)])

    owned_index = [order[offsets[r]:offsets[r + 1]] for r in range(q_count)]
    xs = positions[order, 0]
    bounds = np.empty((q_count, 2))
    bounds[0, 0] = 0.0
    bounds[-1, 1] = L
    for r in range(q_count - 1):
        split = 0.5 * (xs[offsets[r + 1] - 1] + xs[offsets[r + 1]])
        bounds[r, 1] = split
        bounds[r + 1, 0] = split

    rank_of_gid = np.empty(n, dtype=np.int64)
    for r in range(q_count):
        rank_of_gid[gids[owned_index[r]]] = r
    return RankLayout(q_count, bounds, rank_of_gid, owned_index)


@dataclass(slots=True)
class HaloSet:
    """Read-only copies of remote particles in interaction range, gid-sorted."""

    gid: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    mass: np.ndarray
    u: np.ndarray
    rho: np.ndarray
    h: np.ndarray

    @property
    def n(self) -> int:
        return int(self.gid.shape[0])

    @staticmethod
    def empty(dim: int) -> "HaloSet":
        return HaloSet(
            gid=np.empty(0, dtype=np.int64),
            pos=np.empty((0, dim)),
            vel=np.empty((0, dim)),
            mass=np.empty(0),
            u=np.empty(0),
            rho=np.empty(0),
            h=np.empty(0),
        )

    def copy(self) -> "HaloSet":
        return HaloSet(
            self.gid.copy(), self.pos.copy(), self.vel.copy(),
            self.mass.copy(), self.u.copy(), self.rho.copy(), self.h.copy(),
        )


@dataclass(slots=True)
class CellGrid:
    ncells: int              # cells per axis
    edge: float
    order: np.ndarray        # point indices sorted by flat cell id
    start: np.ndarray        # bucket boundaries into order, length ncells^d + 1
    coords: np.ndarray       # (m, d) integer cell coordinates per point
    dim: int
    periodic: bool


def build_cell_grid(points: np.ndarray, box_length: float, radius: float, periodic: bool) -> CellGrid:
    """Uniform grid with cell edge >= the interaction radius (one-ring stencil)."""
    dim = points.shape[1]
    ncells = max(1, int(np.floor(box_length / max(radius, 1e-300))))
    edge = box_length / ncells
    wrapped = np.mod(points, box_length) if periodic else points
    coords = np.floor(wrapped / edge).astype(np.int64)
    if periodic:
        coords = np.mod(coords, ncells)
    else:
        coords = np.clip(coords, 0, ncells - 1)
    flat = coords[:, 0]
    for d in range(1, dim):
        flat = flat * ncells + coords[:, d]
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=ncells**dim)
    start = np.concatenate([[0], np.cumsum(counts)])
    return CellGrid(ncells, edge, order, start, coords, dim, periodic)


_STENCILS: dict[int, np.ndarray] = {}


def _stencil(dim: int) -> np.ndarray:
    if dim not in _STENCILS:
        axes = [np.array([-1, 0, 1])] * dim
        grids = np.meshgrid(*axes, indexing="ij")
        _STENCILS[dim] = np.stack([g.ravel() for g in grids], axis=1)
    return _STENCILS[dim]


@dataclass(slots=True)
class NeighborTable:
    query: np.ndarray    # combined indices of the particles queried (owned subset)
    indptr: np.ndarray   # CSR offsets, length len(query) + 1
    flat: np.ndarray     # combined indices of neighbors, gid-sorted per segment
    counts: np.ndarray

    @property
    def n_query(self) -> int:
        return int(self.query.shape[0])


def find_neighbors(
    points: np.ndarray,
    gids: np.ndarray,
    h_owned: np.ndarray,
    owned_count: int,
    box_length: float,
    periodic: bool,
    ng_max: int,
    query: np.ndarray | None = None,
    grid: CellGrid | None = None,
) -> NeighborTable:
    """Neighbor lists for owned particles over the combined owned+halo points.

    points holds owned particles first (owned_count of them) followed by halo
    copies. The result is identical for identical inputs regardless of grid
    traversal order: candidates are filtered by exact squared distance and each
    list is sorted by global id.
    """
    if query is None:
        query = np.arange(owned_count, dtype=np.int64)
    else:
        query = np.asarray(query, dtype=np.int64)
    nq = query.shape[0]
    if nq == 0:
        return NeighborTable(query, np.zeros(1, dtype=np.int64),
                             np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))

    hq = h_owned[query]
    radius = SUPPORT_FACTOR * float(np.max(hq))
    if grid is None:
        grid = build_cell_grid(points, box_length, radius, periodic)
    dim = grid.dim
    ncells = grid.ncells

    # group query particles by their cell so each block does one candidate gather
    qflat = grid.coords[query, 0]
    for d in range(1, dim):
        qflat = qflat * ncells + grid.coords[query, d]
    qorder = np.argsort(qflat, kind="stable")
    lists: list = [None] * nq
    stencil = _stencil(dim)

    pos = 0
    while pos < nq:
        end = pos + 1
        cell = qflat[qorder[pos]]
        while end < nq and qflat[qorder[end]] == cell:
            end += 1
        members = query[qorder[pos:end]]
        base = grid.coords[members[0]]
        cells = base[None, :] + stencil
        if periodic:
            cells = np.mod(cells, ncells)
        else:
            keep = ((cells >= 0) & (cells < ncells)).all(axis=1)
            cells = cells[keep]
        cflat = cells[:, 0]
        for d in range(1, dim):
            cflat = cflat * ncells + cells[:, d]
        cflat = np.unique(cflat)
        cand = np.concatenate([grid.order[grid.start[c]:grid.start[c + 1]] for c in cflat])
        cand = cand[np.argsort(gids[cand], kind="stable")]

        dx = separation(points[members][:, None, :], points[cand][None, :, :],
                        box_length, periodic)
        d2 = (dx * dx).sum(axis=2)
        limit = (SUPPORT_FACTOR * h_owned[members]) ** 2
        mask = (d2 < limit[:, None]) & (cand[None, :] != members[:, None])
        for row, qi in enumerate(qorder[pos:end]):
            lists[qi] = cand[mask[row]]
        pos = end

    counts = np.array([lst.shape[0] for lst in lists], dtype=np.int64)
    over = counts > ng_max
    if over.any():
        worst = int(np.argmax(counts))
        raise NeighborOverflowError(
            f"particle gid {int(gids[query[worst]])} has {int(counts[worst])} "
            f"neighbors, exceeding ng_max={ng_max}"
        )
    indptr = np.concatenate([[0], np.cumsum(counts)])
    flat = np.concatenate(lists) if counts.sum() else np.empty(0, dtype=np.int64)
    return NeighborTable(query, indptr.astype(np.int64), flat.astype(np.int64), counts)


def update_smoothing_lengths(
    h: np.ndarray, counts: np.ndarray, ng_target: int, dim: int, h_init: float
) -> np.ndarray:
    """One rescaling per step toward the target neighbor count.

    h_i <- h_i * (ng_target / max(count_i, 1))^(1/d), clamped to
    [0.25 h_init, 4 h_init]. cbrt/sqrt keep the exact-ratio cases exact
    (count = ng_target leaves h bit-identical; 8x the target halves it in 3D).
    """
    ratio = ng_target / np.maximum(counts, 1).astype(np.float64)
    factor = np.cbrt(ratio) if dim == 3 else np.sqrt(ratio)
    return np.clip(h * factor, 0.25 * h_init, 4.0 * h_init)
