"""Greedy maximal-independent-set selection of particles to replicate.

The selection graph joins two locally owned particles when either one lists
the other as a neighbor (symmetrized gather relation); a maximal independent
set of that graph is also a dominating set, so every owned particle is either
selected or adjacent to a selected one. Greedy order is ascending global id,
which makes the pick deterministic; total work is O(n_q * ng_max).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import NeighborTable


@dataclass(slots=True)
class SelectionSet:
    rank_id: int
    indices: np.ndarray   # owned local indices, ascending global id
    gids: np.ndarray
    selected_fraction: float

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])


def owned_adjacency(table: NeighborTable, owned_count: int) -> tuple[np.ndarray, np.ndarray]:
    """CSR of neighbor references restricted to locally owned particles."""
    keep = table.flat < owned_count
    cums = np.concatenate([[0], np.cumsum(keep, dtype=np.int64)])
    counts = cums[table.indptr[1:]] - cums[table.indptr[:-1]]
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return indptr, table.flat[keep]


def select_particles(table: NeighborTable, gids_owned: np.ndarray, rank: int) -> SelectionSet:
    """Greedy MIS over the owned particles in ascending global-id order.

    A particle joins the set when no symmetric neighbor was picked before it:
    being listed by an earlier pick marks it removed, and picks it lists are
    caught by checking its own list. Either way the particle ends up dominated.
    """
    n_owned = int(gids_owned.shape[0])
    if n_owned == 0:
        empty = np.empty(0, dtype=np.int64)
        return SelectionSet(rank, empty, empty.copy(), 0.0)

    indptr, flat = owned_adjacency(table, n_owned)
    removed = np.zeros(n_owned, dtype=bool)
    selected = np.zeros(n_owned, dtype=bool)
    picks: list[int] = []
    for i in np.argsort(gids_owned):
        if removed[i] or selected[i]:
            continue
        nb = flat[indptr[i]:indptr[i + 1]]
        if nb.size and selected[nb].any():
            continue
        selected[i] = True
        picks.append(int(i))
        if nb.size:
            removed[nb] = True
    indices = np.array(picks, dtype=np.int64)
    return SelectionSet(rank, indices, gids_owned[indices].copy(), len(picks) / n_owned)


def verify_selection(
    table: NeighborTable, owned_count: int, indices: np.ndarray
) -> tuple[bool, bool]:
    """Direct check of (independence, domination) on the symmetrized owned graph."""
    adj: list[set[int]] = [set() for _ in range(owned_count)]
    indptr, flat = owned_adjacency(table, owned_count)
    for i in range(owned_count):
        for j in flat[indptr[i]:indptr[i + 1]]:
            adj[i].add(int(j))
            adj[int(j)].add(i)
    chosen = set(int(i) for i in indices)
    independent = all(j not in adj[i] for i in chosen for j in chosen if j != i)
    dominating = all(i in chosen or adj[i] & chosen for i in range(owned_count))
    return independent, dominating
