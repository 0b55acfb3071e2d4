"""Detector model types and the AVDM binary model format.

A model is a set of components scored independently; each component has a
root filter over the 31 feature channels, an additive bias, and optionally
parts anchored relative to the root that pay a quadratic displacement cost.

AVDM layout (all little-endian): magic ``AVDM``, u16 version, u16 class-name
length + UTF-8 bytes, u16 cell_size, u16 levels_per_octave, f32 threshold,
u16 component count; per component: f32 bias, u16 root width, u16 root
height, root weights as f32 (row-major, channel fastest), u16 part count;
per part: u16 width, u16 height, weights as f32, i16 anchor x, i16 anchor y,
f32 deformation (dx, dy, dxx, dyy).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import N_CHANNELS

__all__ = [
    "Filter",
    "Part",
    "Component",
    "DetectorModel",
    "Detection",
    "save_model",
    "load_model",
    "model_to_bytes",
    "model_from_bytes",
]

_MAGIC = b"AVDM"
_VERSION = 1
_MIN_CURVATURE = 1e-6


class ModelFormatError(ValueError):
    """Raised for malformed AVDM payloads."""


@dataclass
class Filter:
    """A linear filter over feature cells; weights shaped (h, w, 31) float32."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float32)
        if w.ndim != 3 or w.shape[2] != N_CHANNELS:
            raise ValueError(f"filter weights must be (h, w, {N_CHANNELS}), got {w.shape}")
        if w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError("filter must span at least one cell")
        if not np.all(np.isfinite(w)):
            raise ValueError("filter weights must be finite")
        self.weights = w

    @property
    def w(self) -> int:
        return self.weights.shape[1]

    @property
    def h(self) -> int:
        return self.weights.shape[0]


@dataclass
class Part:
    """A part filter with its anchor (in the finer level's cells) and costs.

    Deformation is (dx, dy, dxx, dyy): a displacement (u, v) from the anchor
    costs dx|u| + dxx u^2 + dy|v| + dyy v^2.  The curvatures must be at least
    1e-6 so the cost is strictly convex along both axes.
    """

    filter: Filter
    anchor: tuple[int, int]
    deform: tuple[float, float, float, float]

    def __post_init__(self):
        ax, ay = self.anchor
        self.anchor = (int(ax), int(ay))
        # quantize to f32 so an in-memory model equals its serialized round trip
        dx, dy, dxx, dyy = (float(np.float32(v)) for v in self.deform)
        if dx < 0.0 or dy < 0.0:
            raise ValueError("linear deformation costs must be non-negative")
        if dxx < _MIN_CURVATURE or dyy < _MIN_CURVATURE:
            raise ValueError(f"deformation curvature must be >= {_MIN_CURVATURE}")
        self.deform = (dx, dy, dxx, dyy)


@dataclass
class Component:
    """One root filter with bias and zero or more parts."""

    root: Filter
    bias: float = 0.0
    parts: list[Part] = field(default_factory=list)

    def __post_init__(self):
        self.bias = float(np.float32(self.bias))
        for p in self.parts:
            ax, ay = p.anchor
            if not (-2 * self.root.w <= ax <= 2 * self.root.w):
                raise ValueError(f"part anchor x={ax} outside 2x root footprint")
            if not (-2 * self.root.h <= ay <= 2 * self.root.h):
                raise ValueError(f"part anchor y={ay} outside 2x root footprint")


@dataclass
class DetectorModel:
    """A trained detector for one object class."""

    class_name: str
    components: list[Component]
    threshold: float
    cell_size: int = 8
    levels_per_octave: int = 10

    def __post_init__(self):
        if not self.components:
            raise ValueError("a model needs at least one component")
        self.threshold = float(np.float32(self.threshold))


@dataclass(frozen=True)
class Detection:
    """A scored box.  Coordinates live in the frame of the scored image."""

    box: tuple[float, float, float, float]
    score: float
    view_index: int = 0
    component_index: int = 0
    level_index: int = 0


# ---------------------------------------------------------------------------
# AVDM serialization


def _pack_filter(filt: Filter) -> bytes:
    head = struct.pack("<HH", filt.w, filt.h)
    return head + filt.weights.astype("<f4", copy=False).tobytes(order="C")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError("truncated AVDM payload")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _unpack_filter(r: _Reader) -> Filter:
    w, h = r.unpack("<HH")
    if w < 1 or h < 1:
        raise ModelFormatError("degenerate filter dimensions")
    raw = r.take(w * h * N_CHANNELS * 4)
    weights = np.frombuffer(raw, dtype="<f4").reshape(h, w, N_CHANNELS).copy()
    if not np.all(np.isfinite(weights)):
        raise ModelFormatError("non-finite filter weights")
    return Filter(weights=weights)


def model_to_bytes(model: DetectorModel) -> bytes:
    name = model.class_name.encode("utf-8")
    if len(name) > 0xFFFF:
        raise ValueError("class name too long")
    out = [
        _MAGIC,
        struct.pack("<H", _VERSION),
        struct.pack("<H", len(name)),
        name,
        struct.pack("<HH", model.cell_size, model.levels_per_octave),
        struct.pack("<f", model.threshold),
        struct.pack("<H", len(model.components)),
    ]
    for comp in model.components:
        out.append(struct.pack("<f", comp.bias))
        out.append(_pack_filter(comp.root))
        out.append(struct.pack("<H", len(comp.parts)))
        for part in comp.parts:
            out.append(_pack_filter(part.filter))
            out.append(struct.pack("<hh", part.anchor[0], part.anchor[1]))
            out.append(struct.pack("<4f", *part.deform))
    return b"".join(out)


def model_from_bytes(data: bytes) -> DetectorModel:
    r = _Reader(data)
    if r.take(4) != _MAGIC:
        raise ModelFormatError("not an AVDM payload (bad magic)")
    (version,) = r.unpack("<H")
    if version != _VERSION:
        raise ModelFormatError(f"unsupported AVDM version {version}")
    (name_len,) = r.unpack("<H")
    class_name = r.take(name_len).decode("utf-8")
    cell_size, levels_per_octave = r.unpack("<HH")
    (threshold,) = r.unpack("<f")
    (n_comp,) = r.unpack("<H")
    components = []
    for _ in range(n_comp):
        (bias,) = r.unpack("<f")
        root = _unpack_filter(r)
        (n_parts,) = r.unpack("<H")
        parts = []
        for _ in range(n_parts):
            pf = _unpack_filter(r)
            ax, ay = r.unpack("<hh")
            deform = r.unpack("<4f")
            parts.append(Part(filter=pf, anchor=(ax, ay), deform=deform))
        components.append(Component(root=root, bias=bias, parts=parts))
    if r.pos != len(data):
        raise ModelFormatError("trailing bytes after AVDM payload")
    return DetectorModel(
        class_name=class_name,
        components=components,
        threshold=threshold,
        cell_size=cell_size,
        levels_per_octave=levels_per_octave,
    )


def save_model(model: DetectorModel, path: str | Path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path: str | Path) -> DetectorModel:
    return model_from_bytes(Path(path).read_bytes())
