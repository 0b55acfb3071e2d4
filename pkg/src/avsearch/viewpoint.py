"""Simulated camera viewpoints: tilt/rotation grid, warping, backprojection.

A view is parameterized by a tilt ``t = 1 / cos(theta)`` (theta is the
latitude angle of the simulated camera) and an in-plane rotation ``phi``.
Simulating a view rotates the image by phi, anti-alias blurs along x with
``sigma = antialias * sqrt(t^2 - 1)``, then compresses x by ``1/t``.  The
grid covers tilts ``sqrt(2)**k`` up to ``t_max`` and, per tilt, rotations
spaced ``rotation_base / t`` over [0, pi); tilt 1 keeps only phi = 0.

Boxes found in a simulated view map back to the original image frame through
the view's inverse map (enclosing axis-aligned rectangle of the warped
corners, clipped to the image).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imaging import AffineMap, gaussian_blur, warp_affine

__all__ = [
    "ViewParams",
    "ViewGrid",
    "sample_view_grid",
    "make_view",
    "simulate_view",
    "backproject_box",
]

_ANGLE_EPS = 1e-9


@dataclass(frozen=True)
class ViewGrid:
    """The (tilt, phi) pairs to simulate; the first entry is the identity."""

    t_max: float
    rotation_base: float
    views: tuple[tuple[float, float], ...]

    def __len__(self) -> int:
        return len(self.views)


@dataclass(frozen=True)
class ViewParams:
    """One view bound to a source image size.

    `forward` maps source pixel coordinates into the simulated frame;
    `inverse` goes back.  `out_w`/`out_h` are the simulated image dims.
    """

    tilt: float
    phi: float
    src_w: int
    src_h: int
    out_w: int
    out_h: int
    forward: AffineMap
    inverse: AffineMap

    @property
    def is_identity(self) -> bool:
        return self.tilt == 1.0 and self.phi == 0.0


def sample_view_grid(t_max: float = 2.0, rotation_base: float = math.radians(72.0)) -> ViewGrid:
    """Enumerate the view grid for the given tilt ceiling and rotation base."""
    if t_max < 1.0:
        raise ValueError("t_max must be >= 1")
    if rotation_base <= 0.0:
        raise ValueError("rotation_base must be positive")
    views: list[tuple[float, float]] = []
    k = 0
    while True:
        tilt = 2.0 ** (k / 2.0)  # sqrt(2)**k without compounding rounding
        if tilt > t_max * (1.0 + 1e-12):
            break
        if k == 0:
            views.append((1.0, 0.0))
        else:
            step = rotation_base / tilt
            j = 0
            while True:
                phi = j * step
                if phi >= math.pi - _ANGLE_EPS:
                    break
                views.append((tilt, phi))
                j += 1
        k += 1
    return ViewGrid(t_max=t_max, rotation_base=rotation_base, views=tuple(views))


def _rotated_frame(w: int, h: int, phi: float):
    """Bounding frame of the image rectangle rotated by phi about the origin."""
    c, s = math.cos(phi), math.sin(phi)
    xs = np.array([0.0, w, w, 0.0])
    ys = np.array([0.0, 0.0, h, h])
    rx = c * xs - s * ys
    ry = s * xs + c * ys
    mx, my = rx.min(), ry.min()
    out_w = int(math.floor(rx.max() - mx + 0.5))
    out_h = int(math.floor(ry.max() - my + 0.5))
    rot = AffineMap(c, -s, s, c, -mx, -my)
    return rot, max(out_w, 1), max(out_h, 1)


def make_view(tilt: float, phi: float, width: int, height: int) -> ViewParams:
    """Bind a grid entry to an image size, fixing maps and output dims."""
    if tilt < 1.0:
        raise ValueError("tilt must be >= 1")
    if tilt == 1.0 and phi != 0.0:
        raise ValueError("tilt 1 admits only phi = 0")
    rot, rw, rh = _rotated_frame(width, height, phi)
    out_w = max(int(math.floor(rw / tilt + 0.5)), 1)
    out_h = rh
    forward = AffineMap.scaling(1.0 / tilt, 1.0).compose(rot)
    return ViewParams(
        tilt=float(tilt),
        phi=float(phi),
        src_w=width,
        src_h=height,
        out_w=out_w,
        out_h=out_h,
        forward=forward,
        inverse=forward.inverse(),
    )


def simulate_view(img: np.ndarray, view: ViewParams, antialias: float = 0.8) -> np.ndarray:
    """Render the image as seen from the view.

    The identity view returns an untouched copy.  Pixels with no preimage
    are filled with 0.
    """
    h, w = img.shape
    if (w, h) != (view.src_w, view.src_h):
        raise ValueError(
            f"view was built for {view.src_w}x{view.src_h}, image is {w}x{h}"
        )
    if view.is_identity:
        return img.copy()
    rot, rw, rh = _rotated_frame(w, h, view.phi)
    stage = img if view.phi == 0.0 else warp_affine(img, rot, rw, rh, fill=0.0)
    sigma = antialias * math.sqrt(view.tilt * view.tilt - 1.0)
    if sigma > 0.0:
        stage = gaussian_blur(stage, sigma, 0.0)
    squeeze = AffineMap.scaling(1.0 / view.tilt, 1.0)
    return warp_affine(stage, squeeze, view.out_w, view.out_h, fill=0.0)


def backproject_box(
    box: tuple[float, float, float, float], view: ViewParams
) -> tuple[float, float, float, float] | None:
    """Map a box from the simulated frame back to the original image.

    Returns the enclosing axis-aligned rectangle of the back-projected
    corners, clipped to the image bounds, or None if nothing remains.
    """
    x0, y0, x1, y1 = box
    xs = np.array([x0, x1, x1, x0])
    ys = np.array([y0, y0, y1, y1])
    bx, by = view.inverse.apply(xs, ys)
    rx0 = max(float(bx.min()), 0.0)
    ry0 = max(float(by.min()), 0.0)
    rx1 = min(float(bx.max()), float(view.src_w))
    ry1 = min(float(by.max()), float(view.src_h))
    if rx1 <= rx0 or ry1 <= ry0:
        return None
    return (rx0, ry0, rx1, ry1)
