"""Input validation helpers used at the public API boundaries."""

from __future__ import annotations

import numpy as np

__all__ = ["check_image", "check_boxes", "check_box"]


def check_image(img, *, name: str = "image") -> np.ndarray:
    """Validate and coerce an image to a 2-D float64 array in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one pixel")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_box(box, *, name: str = "box") -> tuple[float, float, float, float]:
    """Validate a (x0, y0, x1, y1) rectangle with positive extent."""
    vals = tuple(float(v) for v in box)
    if len(vals) != 4:
        raise ValueError(f"{name} must have four coordinates, got {len(vals)}")
    x0, y0, x1, y1 = vals
    if not all(np.isfinite(v) for v in vals):
        raise ValueError(f"{name} contains non-finite coordinates")
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"{name} is empty: {vals}")
    return vals


def check_boxes(boxes, *, name: str = "boxes") -> list[tuple[float, float, float, float]]:
    """Validate a sequence of boxes (possibly empty)."""
    return [check_box(b, name=f"{name}[{i}]") for i, b in enumerate(boxes)]
