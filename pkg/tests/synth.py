"""Synthetic planted-pattern scenes shared by the test suite.

The pattern is an L-shaped tile (two bright bars on a dark square) pasted
into noisy backgrounds at varied scales.  It has strong oriented structure
at two orientations, so a small trained root filter separates it cleanly
from background noise while staying cheap enough for CI.
"""

from __future__ import annotations

import numpy as np

from avsearch.imaging import resize_bilinear

TILE_SIZE = 96

# eval scenes are generated from a seed disjoint from the training seed
TRAIN_SEED = 1000
EVAL_SEED = 2000
TILT_SEED = 3000
MEDIA_SEED = 4000


def make_tile(size: int = TILE_SIZE) -> np.ndarray:
    """L-shaped calibration pattern: vertical + horizontal bright bars."""
    tile = np.full((size, size), 0.15, dtype=np.float64)
    tile[12:84, 12:44] = 0.95
    tile[60:84, 12:84] = 0.95
    return tile


def make_background(w: int, h: int, rng: np.random.RandomState) -> np.ndarray:
    base = rng.uniform(0.3, 0.5)
    return np.clip(rng.normal(base, 0.03, size=(h, w)), 0.0, 1.0)


def plant(
    img: np.ndarray,
    rng: np.random.RandomState,
    size: int,
    stretch: float = 1.0,
) -> tuple[float, float, float, float]:
    """Paste the tile, resized to size px tall (stretch * size wide).

    Returns the pasted box (x0, y0, x1, y1).  Placement is uniform over
    positions where the patch fits entirely inside the image.
    """
    h, w = img.shape
    tw, th = int(round(size * stretch)), size
    if tw > w or th > h:
        raise ValueError(f"patch {tw}x{th} does not fit in {w}x{h}")
    patch = resize_bilinear(make_tile(), tw, th)
    x0 = int(rng.randint(0, w - tw + 1))
    y0 = int(rng.randint(0, h - th + 1))
    img[y0:y0 + th, x0:x0 + tw] = patch
    return (float(x0), float(y0), float(x0 + tw), float(y0 + th))


def positive_scene(
    rng: np.random.RandomState,
    w: int = 192,
    h: int = 192,
    size_range: tuple[int, int] = (80, 128),
    stretch: float = 1.0,
):
    """One background with one planted pattern; returns (image, [box])."""
    img = make_background(w, h, rng)
    size = int(rng.randint(size_range[0], size_range[1] + 1))
    box = plant(img, rng, size, stretch)
    return img, [box]


def training_corpus(n_pos: int = 20, n_neg: int = 20, seed: int = TRAIN_SEED):
    """Planted positives (scale-varied) plus pattern-free negatives."""
    rng = np.random.RandomState(seed)
    positives = [positive_scene(rng) for _ in range(n_pos)]
    negatives = [make_background(192, 192, rng) for _ in range(n_neg)]
    return positives, negatives


def eval_corpus(n_planted: int = 6, n_empty: int = 4, seed: int = EVAL_SEED):
    """Held-out scenes: planted ones first, then empty backgrounds.

    Returns a list of (image, boxes) where boxes is [] for empty scenes.
    """
    rng = np.random.RandomState(seed)
    scenes = [positive_scene(rng) for _ in range(n_planted)]
    scenes += [(make_background(192, 192, rng), []) for _ in range(n_empty)]
    return scenes


def tilt_corpus(n: int = 20, seed: int = TILT_SEED):
    """Scenes whose pattern is stretched 2:1, as a 60-degree tilt leaves it.

    A tilt-2 simulated view squeezes x by half, which restores the pattern
    to its trained square shape; the identity view sees only the stretched
    version.  Scenes are wide so the stretched patch fits.
    """
    rng = np.random.RandomState(seed)
    return [
        positive_scene(rng, w=320, h=192, size_range=(80, 88), stretch=2.0)
        for _ in range(n)
    ]
