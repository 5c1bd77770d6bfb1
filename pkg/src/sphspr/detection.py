"""Bit-level comparison of selected particles against their replicas.

Values are compared as raw 64-bit patterns with the k lowest mantissa bits
masked on both sides; k = 0 is exact bit equality. A mismatch carries both
patterns so the event log can show exactly which bits disagreed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .particles import FIELD_LAYOUT

_AXES = "xyz"


def field_columns(dim: int) -> list[tuple[str, str, int | None]]:
    """Flattened (column, field, component) triples in declaration order."""
    cols: list[tuple[str, str, int | None]] = []
    for name, is_vec in FIELD_LAYOUT:
        if is_vec:
            cols.extend((f"{name}_{_AXES[c]}", name, c) for c in range(dim))
        else:
            cols.append((name, name, None))
    return cols


def mask_low_bits(patterns: np.ndarray, k: int) -> np.ndarray:
    """Clear the k lowest-order mantissa bits of raw float64 patterns."""
    if k == 0:
        return patterns
    return patterns & np.uint64(~np.uint64((1 << k) - 1))


def bits_of(values: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64).view(np.uint64)


@dataclass(slots=True)
class Mismatch:
    gid: int
    field: str
    local_bits: int
    replica_bits: int


@dataclass(slots=True)
class DetectionReport:
    step: int
    sub_step: str
    rank: int
    mismatches: list = field(default_factory=list)

    @property
    def error_flag(self) -> bool:
        return bool(self.mismatches)


def compare_replica_payload(
    report: DetectionReport,
    gids: np.ndarray,
    local_fields: dict,
    replica_fields: dict,
    dim: int,
    tolerance_bits: int,
) -> DetectionReport:
    """Compare every field column of the selected particles, masked by k bits.

    local_fields / replica_fields map field name -> array restricted to the
    selected particles, in the same order as gids.
    """
    for column, name, comp in field_columns(dim):
        loc = local_fields[name] if comp is None else local_fields[name][:, comp]
        rep = replica_fields[name] if comp is None else replica_fields[name][:, comp]
        lb = bits_of(loc)
        rb = bits_of(rep)
        diff = mask_low_bits(lb, tolerance_bits) != mask_low_bits(rb, tolerance_bits)
        if diff.any():
            for i in np.nonzero(diff)[0]:
                report.mismatches.append(
                    Mismatch(int(gids[i]), column, int(lb[i]), int(rb[i]))
                )
    return report
