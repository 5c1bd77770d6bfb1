"""Simulation configuration and run manifests.

Configs come from a flat ``key = value`` text file, command-line overrides, or
defaults, with precedence flags > file > defaults. The fully resolved manifest
is echoed into the output directory so a run can be reproduced byte-for-byte
from its own artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

MANTISSA_BITS = 52
FORMAT_VERSION = 1

WORKLOADS = ("uniform-lattice", "perturbed-lattice", "hot-sphere")
MODES = ("baseline", "spr")


class ConfigError(ValueError):
    """Invalid configuration value or file."""


@dataclass(frozen=True, slots=True)
class SimConfig:
    dimensionality: int = 3
    particle_count: int = 512
    rank_count: int = 2
    target_neighbor_count: int = 64
    max_neighbor_count: int = 256
    box_length: float = 1.0
    periodic: bool = True
    cfl_factor: float = 0.3
    tolerance_bits: int = 0
    rng_seed: int = 42
    time_step_count: int = 20

    def validate(self) -> None:
        if self.dimensionality not in (2, 3):
            raise ConfigError(f"dimensionality must be 2 or 3, got {self.dimensionality}")
        if self.particle_count < 1:
            raise ConfigError(f"particle_count must be positive, got {self.particle_count}")
        if self.rank_count < 2:
            raise ConfigError(
                f"rank_count must be at least 2 (replication needs a distinct "
                f"target rank), got {self.rank_count}"
            )
        if not (0 < self.target_neighbor_count <= self.max_neighbor_count):
            raise ConfigError(
                f"need 0 < target_neighbor_count <= max_neighbor_count, got "
                f"{self.target_neighbor_count} and {self.max_neighbor_count}"
            )
        if not (0 <= self.tolerance_bits <= MANTISSA_BITS):
            raise ConfigError(
                f"tolerance_bits must lie in [0, {MANTISSA_BITS}] (the mantissa "
                f"width of a 64-bit float), got {self.tolerance_bits}"
            )
        if self.box_length <= 0:
            raise ConfigError(f"box_length must be positive, got {self.box_length}")
        if self.cfl_factor <= 0:
            raise ConfigError(f"cfl_factor must be positive, got {self.cfl_factor}")
        if self.time_step_count < 0:
            raise ConfigError(f"time_step_count must be >= 0, got {self.time_step_count}")


@dataclass(frozen=True, slots=True)
class RunManifest:
    config: SimConfig = field(default_factory=SimConfig)
    workload: str = "hot-sphere"
    mode: str = "spr"
    recovery: bool = False
    output_dir: str = ""
    format_version: int = FORMAT_VERSION

    def validate(self) -> None:
        self.config.validate()
        if self.workload not in WORKLOADS:
            raise ConfigError(f"workload must be one of {WORKLOADS}, got {self.workload!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.format_version != FORMAT_VERSION:
            raise ConfigError(
                f"format_version {self.format_version} not supported "
                f"(expected {FORMAT_VERSION})"
            )

    def with_mode(self, mode: str) -> "RunManifest":
        return replace(self, mode=mode)


_CONFIG_FIELDS = {f.name: f.type for f in fields(SimConfig)}
_MANIFEST_FIELDS = ("workload", "mode", "recovery", "output_dir", "format_version")
_BOOL_KEYS = {"periodic", "recovery"}
_INT_KEYS = {
    "dimensionality", "particle_count", "rank_count", "target_neighbor_count",
    "max_neighbor_count", "tolerance_bits", "rng_seed", "time_step_count",
    "format_version",
}
_FLOAT_KEYS = {"box_length", "cfl_factor"}
_STR_KEYS = {"workload", "mode", "output_dir"}
KNOWN_KEYS = set(_CONFIG_FIELDS) | set(_MANIFEST_FIELDS)


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _BOOL_KEYS:
            low = raw.lower()
            if low in ("true", "on", "yes", "1"):
                return True
            if low in ("false", "off", "no", "0"):
                return False
            raise ValueError("expected a boolean")
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None


def read_config_file(path: str | Path) -> dict:
    """Parse a flat key = value file; unknown keys are rejected by name."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} with value {raw.strip()!r}")
        values[key] = _parse_value(key, raw)
    return values


def parse_config(path: str | Path | None = None, overrides: dict | None = None) -> RunManifest:
    """Resolve a manifest with precedence overrides > file > defaults."""
    values: dict = {}
    if path is not None:
        values.update(read_config_file(path))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r} with value {val!r}")
        values[key] = _parse_value(key, str(val)) if isinstance(val, str) else val
    cfg_kwargs = {k: v for k, v in values.items() if k in _CONFIG_FIELDS}
    man_kwargs = {k: v for k, v in values.items() if k in _MANIFEST_FIELDS}
    manifest = RunManifest(config=SimConfig(**cfg_kwargs), **man_kwargs)
    manifest.validate()
    return manifest


def manifest_lines(manifest: RunManifest) -> list[str]:
    lines = []
    for f in fields(SimConfig):
        lines.append(f"{f.name} = {getattr(manifest.config, f.name)}")
    lines.append(f"workload = {manifest.workload}")
    lines.append(f"mode = {manifest.mode}")
    lines.append(f"recovery = {manifest.recovery}")
    lines.append(f"output_dir = {manifest.output_dir}")
    lines.append(f"format_version = {manifest.format_version}")
    return lines


def echo_manifest(manifest: RunManifest, out_dir: str | Path) -> Path:
    """Write the resolved manifest into the output directory; returns the path."""
    out = Path(out_dir) / "manifest.txt"
    out.write_text("\n".join(manifest_lines(manifest)) + "\n")
    return out
