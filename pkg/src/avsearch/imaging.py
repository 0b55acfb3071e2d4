"""Grayscale image primitives: loading, blurring, resampling, affine warps.

An image is a 2-D float64 array indexed ``[row, col]`` with values in
``[0, 1]``.  Color input collapses to luminance on load (ITU-R 601 weights
0.299 / 0.587 / 0.114).  Binary PGM (P5) and PPM (P6) are always supported;
PNG and JPEG work when Pillow is importable.

Geometry convention: a pixel at index ``(x, y)`` sits at the point ``(x, y)``
of the continuous plane, and an affine map acts on those coordinates.  Warps
are destination-driven: every output pixel samples the source at the inverse
map of its own coordinates with bilinear interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "AffineMap",
    "load_image",
    "save_pgm",
    "gaussian_blur",
    "resample",
    "resize_bilinear",
    "warp_affine",
]

# Integer-scaled luminance weights; the numerators sum to exactly 1000 so an
# all-white RGB pixel maps to exactly 1.0.
_LUMA_NUM = (299, 587, 114)
_LUMA_DEN = 255000.0


class ImageFormatError(ValueError):
    """Raised for unreadable or unsupported image files."""


@dataclass(frozen=True)
class AffineMap:
    """2-D affine transform ``(x, y) -> (a11 x + a12 y + tx, a21 x + a22 y + ty)``."""

    a11: float
    a12: float
    a21: float
    a22: float
    tx: float = 0.0
    ty: float = 0.0

    @staticmethod
    def identity() -> "AffineMap":
        return AffineMap(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)

    @staticmethod
    def rotation(angle: float) -> "AffineMap":
        c, s = math.cos(angle), math.sin(angle)
        return AffineMap(c, -s, s, c, 0.0, 0.0)

    @staticmethod
    def scaling(sx: float, sy: float) -> "AffineMap":
        return AffineMap(sx, 0.0, 0.0, sy, 0.0, 0.0)

    def determinant(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def apply(self, x, y):
        """Map coordinates; accepts scalars or arrays."""
        return (
            self.a11 * x + self.a12 * y + self.tx,
            self.a21 * x + self.a22 * y + self.ty,
        )

    def compose(self, other: "AffineMap") -> "AffineMap":
        """Return the map equivalent to applying `other` first, then `self`."""
        return AffineMap(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
            self.a11 * other.tx + self.a12 * other.ty + self.tx,
            self.a21 * other.tx + self.a22 * other.ty + self.ty,
        )

    def inverse(self) -> "AffineMap":
        det = self.determinant()
        if abs(det) < 1e-12:
            raise ValueError("affine map is singular and cannot be inverted")
        b11 = self.a22 / det
        b12 = -self.a12 / det
        b21 = -self.a21 / det
        b22 = self.a11 / det
        return AffineMap(
            b11, b12, b21, b22,
            -(b11 * self.tx + b12 * self.ty),
            -(b21 * self.tx + b22 * self.ty),
        )

    def translated(self, dx: float, dy: float) -> "AffineMap":
        return AffineMap(self.a11, self.a12, self.a21, self.a22, self.tx + dx, self.ty + dy)


# ---------------------------------------------------------------------------
# loading / saving


def _read_pnm_header(data: bytes):
    """Parse a PNM header, returning (magic, width, height, maxval, offset)."""
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data):
            c = data[pos:pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos:pos + 1] != b"\n":
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PNM header")
        return data[start:pos]

    magic = token().decode("ascii", "replace")
    width = int(token())
    height = int(token())
    maxval = int(token())
    pos += 1  # single whitespace byte separating header from raster
    return magic, width, height, maxval, pos


def _decode_pnm(data: bytes) -> np.ndarray:
    magic, width, height, maxval, offset = _read_pnm_header(data)
    if width < 1 or height < 1:
        raise ImageFormatError(f"degenerate PNM dimensions {width}x{height}")
    if maxval > 255:
        raise ImageFormatError("only 8-bit PNM samples are supported")
    channels = 3 if magic == "P6" else 1
    count = width * height * channels
    if len(data) - offset < count:
        raise ImageFormatError("PNM raster is shorter than the header promises")
    raster = np.frombuffer(data, dtype=np.uint8, count=count, offset=offset)
    if channels == 1:
        return raster.reshape(height, width).astype(np.float64) / 255.0
    rgb = raster.reshape(height, width, 3).astype(np.float64)
    return (
        _LUMA_NUM[0] * rgb[:, :, 0]
        + _LUMA_NUM[1] * rgb[:, :, 1]
        + _LUMA_NUM[2] * rgb[:, :, 2]
    ) / _LUMA_DEN


def load_image(path: str | Path) -> np.ndarray:
    """Load an image file as a 2-D luminance array in [0, 1]."""
    data = Path(path).read_bytes()
    if data[:2] in (b"P5", b"P6"):
        img = _decode_pnm(data)
    else:
        try:
            from PIL import Image
        except ImportError as exc:  # pragma: no cover - Pillow is a hard dep
            raise ImageFormatError(
                f"{path}: not a binary PGM/PPM file and Pillow is unavailable"
            ) from exc
        import io

        try:
            with Image.open(io.BytesIO(data)) as im:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
        except Exception as exc:
            raise ImageFormatError(f"{path}: unreadable image file") from exc
        if rgb.shape[0] < 1 or rgb.shape[1] < 1:
            raise ImageFormatError(f"{path}: degenerate image dimensions")
        img = (
            _LUMA_NUM[0] * rgb[:, :, 0]
            + _LUMA_NUM[1] * rgb[:, :, 1]
            + _LUMA_NUM[2] * rgb[:, :, 2]
        ) / _LUMA_DEN
    return np.clip(img, 0.0, 1.0)


def save_pgm(img: np.ndarray, path: str | Path) -> None:
    """Write an image as binary 8-bit PGM (debugging / fixtures)."""
    arr = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    samples = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    h, w = samples.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(samples.tobytes())


# ---------------------------------------------------------------------------
# filtering / resampling


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def gaussian_blur(img: np.ndarray, sigma_x: float, sigma_y: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders.

    Kernel radius is ceil(3 sigma) per axis and the kernel is normalized to
    unit sum, so flat regions keep their brightness.  A sigma of 0 leaves
    that axis untouched.
    """
    if sigma_x < 0 or sigma_y < 0:
        raise ValueError("blur sigma must be non-negative")
    out = np.asarray(img, dtype=np.float64)
    if sigma_x > 0:
        out = _blur_axis(out, sigma_x, axis=1)
    if sigma_y > 0:
        out = _blur_axis(out, sigma_y, axis=0)
    return np.clip(out, 0.0, 1.0)


def _blur_axis(img: np.ndarray, sigma: float, axis: int) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    taps = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(taps * taps) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(img, pad, mode="edge")
    out = np.zeros_like(img)
    n = img.shape[axis]
    for i, k in enumerate(kernel):
        if axis == 1:
            out += k * padded[:, i:i + n]
        else:
            out += k * padded[i:i + n, :]
    return out


def _bilinear_clamped(img: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Sample `img` at float coordinates with clamp-to-edge behaviour."""
    h, w = img.shape
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bottom = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resize to exact output dims with center-aligned bilinear sampling."""
    h, w = img.shape
    if out_w < 1 or out_h < 1:
        raise ValueError(f"degenerate output dimensions {out_w}x{out_h}")
    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    out = _bilinear_clamped(img, sx[None, :], sy[:, None])
    return np.clip(out, 0.0, 1.0)


def resample(img: np.ndarray, scale: float) -> np.ndarray:
    """Rescale by a positive factor; output dims are round(dim * scale)."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    h, w = img.shape
    out_w = _round_half_up(w * scale)
    out_h = _round_half_up(h * scale)
    if out_w < 1 or out_h < 1:
        raise ValueError(f"scale {scale} collapses {w}x{h} to an empty image")
    if out_w == w and out_h == h:
        return img.copy()
    return resize_bilinear(img, out_w, out_h)


def warp_affine(
    img: np.ndarray,
    m: AffineMap,
    out_w: int,
    out_h: int,
    fill: float = 0.0,
) -> np.ndarray:
    """Apply an affine map, sampling the source through the inverse map.

    Output pixel (x, y) takes the bilinear sample of the source at
    ``m.inverse().apply(x, y)``; source coordinates outside the image produce
    `fill`.  An identity map reproduces the input bit-for-bit.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"degenerate output dimensions {out_w}x{out_h}")
    h, w = img.shape
    inv = m.inverse()
    xs = np.arange(out_w, dtype=np.float64)[None, :]
    ys = np.arange(out_h, dtype=np.float64)[:, None]
    sx, sy = inv.apply(xs, ys)
    sx = np.broadcast_to(sx, (out_h, out_w))
    sy = np.broadcast_to(sy, (out_h, out_w))
    inside = (sx >= 0.0) & (sx <= w - 1.0) & (sy >= 0.0) & (sy <= h - 1.0)
    out = _bilinear_clamped(img, sx, sy)
    out = np.where(inside, out, float(fill))
    return np.clip(out, 0.0, 1.0)
