"""Runtime configuration shared by the CLI, the service and the estimators.

Configuration files are plain ``key=value`` lines.  Blank lines and lines
starting with ``#`` are ignored.  Every key can also be overridden from the
command line, so the file is only a convenience for pinning a setup.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

__all__ = ["RuntimeConfig", "load_config", "parse_overrides"]


@dataclass
class RuntimeConfig:
    """Knobs for feature extraction, view search, training and the service."""

    # feature pyramid
    cell_size: int = 8
    levels_per_octave: int = 10
    min_cells: int = 5
    # simulated view grid
    t_max: float = 2.0
    rotation_base_deg: float = 72.0
    antialias: float = 0.8
    # detection fusion
    nms_iou: float = 0.5
    # indexing floor relative to the model threshold
    floor_offset: float = 1.0
    # segment grouping
    gap_tolerance: int = 5
    min_segment_length: int = 3
    # training
    svm_c: float = 0.01
    epochs: int = 30
    mining_rounds: int = 1
    negative_floor: float = -1.0
    max_negative_cache: int = 20000
    seed: int = 0
    # service
    workers: int = 2
    cache_budget: int = 512 * 1024 * 1024

    def replace(self, **kw) -> "RuntimeConfig":
        return dataclasses.replace(self, **kw)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RuntimeConfig)}


def _coerce(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise KeyError(f"unknown config key: {key!r}")
    kind = _FIELD_TYPES[key]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_overrides(pairs: dict[str, str]) -> dict:
    """Coerce string overrides (CLI flags, config lines) to field types."""
    return {k: _coerce(k, v) for k, v in pairs.items()}


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> RuntimeConfig:
    """Read a key=value config file and apply optional overrides on top."""
    values: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        values[key.strip()] = raw.strip()
    if overrides:
        values.update(overrides)
    return RuntimeConfig(**parse_overrides(values))
