"""SPH field evaluation: density, pressure forces, time step, integration.

Summation contract: per-particle contributions are assembled in ascending
global-id order (density includes the self term merged at its sorted position)
and reduced with numpy's add reduction over that sequence. Any independent
check must assemble the same sequence to compare bit-for-bit.
"""

from __future__ import annotations

import numpy as np

from .domain import NeighborTable, separation
from .kernels import kernel_gradient, kernel_value
from .particles import GAMMA

TIMESTEP_EPS = 1e-12


class NonFiniteStateError(RuntimeError):
    """Physics produced or consumed a non-finite value the runtime traps."""


def pressure(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Ideal-gas equation of state, P = (gamma - 1) rho u with gamma = 5/3."""
    return (GAMMA - 1.0) * rho * u


def density_segments(table: NeighborTable, gids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor CSR with each particle's own index merged in gid order.

    The density sum runs over N(i) and i itself; the self entry is inserted at
    its global-id-sorted position so the contribution sequence stays canonical.
    """
    counts = table.counts
    nq = table.n_query
    new_indptr = table.indptr + np.arange(nq + 1, dtype=np.int64)
    flat2 = np.empty(table.flat.size + nq, dtype=np.int64)
    own_gid = gids[table.query]
    if table.flat.size:
        less = (gids[table.flat] < np.repeat(own_gid, counts)).astype(np.int64)
        cums = np.concatenate([[0], np.cumsum(less)])
        insert_at = cums[table.indptr[1:]] - cums[table.indptr[:-1]]
        old_local = np.arange(table.flat.size) - np.repeat(table.indptr[:-1], counts)
        shift = (old_local >= np.repeat(insert_at, counts)).astype(np.int64)
        flat2[np.repeat(new_indptr[:-1], counts) + old_local + shift] = table.flat
    else:
        insert_at = np.zeros(nq, dtype=np.int64)
    flat2[new_indptr[:-1] + insert_at] = table.query
    return new_indptr, flat2


def _segment_sums(values: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    """Per-segment add reduction; empty segments sum to zero."""
    counts = np.diff(indptr)
    if values.shape[0] == 0:
        shape = (counts.shape[0],) + values.shape[1:]
        return np.zeros(shape)
    starts = np.minimum(indptr[:-1], values.shape[0] - 1)
    sums = np.add.reduceat(values, starts, axis=0)
    sums[counts == 0] = 0.0
    return sums


def compute_density(
    points: np.ndarray,
    gids: np.ndarray,
    masses: np.ndarray,
    h_query: np.ndarray,
    table: NeighborTable,
    dim: int,
    box_length: float,
    periodic: bool,
) -> np.ndarray:
    """rho_i = sum over j in N(i) + {i} of m_j W(|x_i - x_j|, h_i), gid order."""
    if table.n_query == 0:
        return np.empty(0)
    indptr2, flat2 = density_segments(table, gids)
    counts2 = np.diff(indptr2)
    i_rep = np.repeat(table.query, counts2)
    dx = separation(points[i_rep], points[flat2], box_length, periodic)
    r = np.sqrt((dx * dx).sum(axis=1))
    w = kernel_value(r, np.repeat(h_query, counts2), dim)
    return _segment_sums(masses[flat2] * w, indptr2)


def compute_accelerations(
    points: np.ndarray,
    vels: np.ndarray,
    gids: np.ndarray,
    masses: np.ndarray,
    p_over_rho2: np.ndarray,
    h_query: np.ndarray,
    table: NeighborTable,
    dim: int,
    box_length: float,
    periodic: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric SPH momentum and energy sums over the neighbor lists.

    a_i = -sum_j m_j (P_i/rho_i^2 + P_j/rho_j^2) gradW_ij
    du_i/dt = 1/2 sum_j m_j (P_i/rho_i^2 + P_j/rho_j^2) (v_i - v_j) . gradW_ij
    with gradW evaluated at h_i, neighbors in gid order.
    """
    nq = table.n_query
    if nq == 0:
        return np.empty((0, dim)), np.empty(0)
    counts = table.counts
    i_rep = np.repeat(table.query, counts)
    flat = table.flat
    dx = separation(points[i_rep], points[flat], box_length, periodic)
    r = np.sqrt((dx * dx).sum(axis=1))
    grad = kernel_gradient(dx, r, np.repeat(h_query, counts), dim)
    pair = p_over_rho2[i_rep] + p_over_rho2[flat]
    mc = masses[flat] * pair
    acc = -_segment_sums(mc[:, None] * grad, table.indptr)
    dv = vels[i_rep] - vels[flat]
    du = 0.5 * _segment_sums(mc * (dv * grad).sum(axis=1), table.indptr)
    return acc, du


def timestep_ratio_min(h: np.ndarray, press: np.ndarray, rho: np.ndarray, vel: np.ndarray) -> float:
    """Local minimum of h / (c + |v| + eps) with c = sqrt(gamma P / rho)."""
    c = np.sqrt(GAMMA * press / rho)
    speed = np.sqrt((vel * vel).sum(axis=1))
    return float(np.min(h / (c + speed + TIMESTEP_EPS)))


def integrate(
    pos: np.ndarray,
    vel: np.ndarray,
    u: np.ndarray,
    acc: np.ndarray,
    du: np.ndarray,
    dt: float,
    box_length: float,
    periodic: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Explicit update v += a dt, x += v dt, u += du dt with periodic wrap.

    Shared by rank workers and replica blocks: both must produce identical
    bit patterns from identical inputs.
    """
    new_vel = vel + acc * dt
    new_pos = pos + new_vel * dt
    if periodic:
        new_pos = np.mod(new_pos, box_length)
    new_u = u + du * dt
    return new_pos, new_vel, new_u


def ensure_finite(arr: np.ndarray, what: str) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteStateError(f"non-finite values in {what}")
