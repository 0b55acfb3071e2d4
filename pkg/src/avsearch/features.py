"""Dense oriented-gradient features and the multi-scale feature pyramid.

Each cell of ``cell_size`` x ``cell_size`` pixels produces 31 channels:

* 0..17   signed orientation sums (18 sectors over [0, 2pi)), x0.5
* 18..26  unsigned orientation sums (9 sectors over [0, pi)), x0.5
* 27..30  texture energy, one channel per 2x2 normalization neighborhood

Per-pixel gradient magnitudes vote into the 18 signed bins of the four
nearest cells with bilinear spatial sharing.  Cell histograms are normalized
four ways (the diagonal 2x2 neighborhoods, border cells clamped), each
normalized value is truncated at 0.2, and the channels above are sums over
the four normalizations.  The texture channels carry the constant 0.2357.

The pyramid rescales the image by ``2**(-i / levels_per_octave)`` per level
and stops before either cell dimension would drop below ``min_cells``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .imaging import resample

__all__ = [
    "FeatureLevel",
    "FeaturePyramid",
    "compute_gradients",
    "hog_level",
    "build_pyramid",
    "N_CHANNELS",
]

N_CHANNELS = 31
_N_SIGNED = 18
_N_UNSIGNED = 9
_EPS = 1e-4
_TRUNCATION = 0.2
_TEXTURE_GAIN = 0.2357


@dataclass
class FeatureLevel:
    """One pyramid level: a cells_h x cells_w x 31 float32 array plus its scale."""

    data: np.ndarray
    scale: float
    cell_size: int

    @property
    def cells_w(self) -> int:
        return self.data.shape[1]

    @property
    def cells_h(self) -> int:
        return self.data.shape[0]


@dataclass
class FeaturePyramid:
    """Feature levels ordered finest (largest image) first."""

    levels: list[FeatureLevel] = field(default_factory=list)
    levels_per_octave: int = 10
    cell_size: int = 8
    min_cells: int = 5

    def __len__(self) -> int:
        return len(self.levels)


def compute_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centered-difference gradients with clamped borders.

    Returns (magnitude, bin) where bin is the nearest of 18 signed
    orientation sectors covering [0, 2pi).
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    dx = np.empty_like(img)
    dy = np.empty_like(img)
    if w > 1:
        dx[:, 1:-1] = img[:, 2:] - img[:, :-2]
        dx[:, 0] = img[:, 1] - img[:, 0]
        dx[:, -1] = img[:, -1] - img[:, -2]
    else:
        dx[:] = 0.0
    if h > 1:
        dy[1:-1, :] = img[2:, :] - img[:-2, :]
        dy[0, :] = img[1, :] - img[0, :]
        dy[-1, :] = img[-1, :] - img[-2, :]
    else:
        dy[:] = 0.0
    mag = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    theta = np.where(theta < 0.0, theta + 2.0 * math.pi, theta)
    bins = np.floor(theta * (_N_SIGNED / (2.0 * math.pi)) + 0.5).astype(np.int64)
    bins %= _N_SIGNED
    return mag, bins


def _vote_histogram(mag, bins, cell_size, cells_w, cells_h):
    """Scatter pixel magnitudes into per-cell signed histograms."""
    h, w = mag.shape
    cx = (np.arange(w, dtype=np.float64) + 0.5) / cell_size - 0.5
    cy = (np.arange(h, dtype=np.float64) + 0.5) / cell_size - 0.5
    ix0 = np.floor(cx).astype(np.int64)
    iy0 = np.floor(cy).astype(np.int64)
    fx = cx - ix0
    fy = cy - iy0
    n_bins = cells_h * cells_w * _N_SIGNED
    hist = np.zeros(n_bins, dtype=np.float64)
    for iy, wy in ((iy0, 1.0 - fy), (iy0 + 1, fy)):
        for ix, wx in ((ix0, 1.0 - fx), (ix0 + 1, fx)):
            iy2 = np.broadcast_to(iy[:, None], (h, w))
            ix2 = np.broadcast_to(ix[None, :], (h, w))
            weight = mag * (wy[:, None] * wx[None, :])
            valid = (iy2 >= 0) & (iy2 < cells_h) & (ix2 >= 0) & (ix2 < cells_w)
            flat = (iy2[valid] * cells_w + ix2[valid]) * _N_SIGNED + bins[valid]
            hist += np.bincount(flat, weights=weight[valid], minlength=n_bins)
    return hist.reshape(cells_h, cells_w, _N_SIGNED)


def hog_level(img: np.ndarray, cell_size: int, scale: float = 1.0) -> FeatureLevel:
    """Compute the 31-channel cell grid for one image at one scale."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if cell_size < 1:
        raise ValueError("cell_size must be >= 1")
    cells_w = w // cell_size
    cells_h = h // cell_size
    if cells_w < 1 or cells_h < 1:
        raise ValueError(
            f"image {w}x{h} is smaller than one {cell_size}px cell"
        )
    mag, bins = compute_gradients(img)
    hist = _vote_histogram(mag, bins, cell_size, cells_w, cells_h)

    unsigned = hist[:, :, :_N_UNSIGNED] + hist[:, :, _N_UNSIGNED:]
    energy = np.sum(unsigned * unsigned, axis=2)

    # The four diagonal 2x2 neighborhood sums, with out-of-grid neighbors
    # clamped to the border cell.
    e = np.pad(energy, 1, mode="edge")
    c = e[1:-1, 1:-1]
    up, down = e[:-2, 1:-1], e[2:, 1:-1]
    left, right = e[1:-1, :-2], e[1:-1, 2:]
    ul, ur = e[:-2, :-2], e[:-2, 2:]
    dl, dr = e[2:, :-2], e[2:, 2:]
    sums = np.stack(
        (c + up + left + ul, c + up + right + ur,
         c + down + left + dl, c + down + right + dr),
        axis=2,
    )
    norms = 1.0 / np.sqrt(sums + _EPS)

    signed_n = np.minimum(hist[:, :, :, None] * norms[:, :, None, :], _TRUNCATION)
    unsigned_n = np.minimum(unsigned[:, :, :, None] * norms[:, :, None, :], _TRUNCATION)

    feat = np.empty((cells_h, cells_w, N_CHANNELS), dtype=np.float64)
    feat[:, :, :_N_SIGNED] = 0.5 * signed_n.sum(axis=3)
    feat[:, :, _N_SIGNED:_N_SIGNED + _N_UNSIGNED] = 0.5 * unsigned_n.sum(axis=3)
    feat[:, :, _N_SIGNED + _N_UNSIGNED:] = _TEXTURE_GAIN * unsigned_n.sum(axis=2)
    return FeatureLevel(data=feat.astype(np.float32), scale=float(scale), cell_size=cell_size)


def pyramid_scale(level: int, levels_per_octave: int) -> float:
    """Scale factor of a pyramid level: 2**(-level / levels_per_octave)."""
    return 2.0 ** (-level / levels_per_octave)


def build_pyramid(
    img: np.ndarray,
    cell_size: int = 8,
    levels_per_octave: int = 10,
    min_cells: int = 5,
) -> FeaturePyramid:
    """Build the dense feature pyramid for an image.

    Levels stop before either cell-grid dimension falls below ``min_cells``;
    an image exactly ``min_cells * cell_size`` square yields one level.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if levels_per_octave < 1:
        raise ValueError("levels_per_octave must be >= 1")
    if min_cells < 1:
        raise ValueError("min_cells must be >= 1")
    levels: list[FeatureLevel] = []
    i = 0
    while True:
        s = pyramid_scale(i, levels_per_octave)
        lw = int(math.floor(w * s + 0.5))
        lh = int(math.floor(h * s + 0.5))
        if lw // cell_size < min_cells or lh // cell_size < min_cells:
            break
        scaled = img if i == 0 else resample(img, s)
        # The serialized pyramid format stores scales as f32; quantize here so
        # a cached level and a freshly built one carry identical values.
        levels.append(hog_level(scaled, cell_size, scale=float(np.float32(s))))
        i += 1
    if not levels:
        raise ValueError(
            f"image {w}x{h} is too small for min_cells={min_cells} at cell_size={cell_size}"
        )
    return FeaturePyramid(
        levels=levels,
        levels_per_octave=levels_per_octave,
        cell_size=cell_size,
        min_cells=min_cells,
    )
