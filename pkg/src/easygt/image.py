"""Image containers, file IO, and the two color transforms that feed thresholding.

The pipeline treats pixels as plain 8-bit integers: no ICC profiles, no gamma.
Every place a real number becomes an 8-bit value uses the same rule,
round-half-away-from-zero then clamp, so results are reproducible bit for bit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, DegenerateChannel, NotFound

# BT.601 luma weights scaled by 1000; integer arithmetic avoids any
# platform-dependent float rounding in the grayscale step.
_LUMA_R, _LUMA_G, _LUMA_B = 299, 587, 114


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Map non-negative reals to uint8: round half away from zero, clamp to [0, 255]."""
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class RgbImage:
    """8-bit three-channel raster; ``pixels`` has shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError(f"expected (H, W, 3) uint8 array, got shape={p.shape} dtype={p.dtype}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        p.setflags(write=False)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class GrayImage:
    """Single-channel 8-bit raster; ``values`` has shape (height, width)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2 or v.dtype != np.uint8:
            raise ValueError(f"expected (H, W) uint8 array, got shape={v.shape} dtype={v.dtype}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        v.setflags(write=False)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CmykImage:
    """Per-pixel CMYK planes: c, m, y are float64 in [0, 1]; k is uint8.

    The primed intermediates (255-R, 255-G, 255-B) exist only inside
    :func:`rgb_to_cmyk`; by construction at least one of them equals k at
    every pixel, so min(c, m, y) == 0 wherever k < 255.
    """

    c: np.ndarray
    m: np.ndarray
    y: np.ndarray
    k: np.ndarray

    def __post_init__(self) -> None:
        shape = self.c.shape
        for plane in (self.c, self.m, self.y):
            if plane.ndim != 2 or plane.dtype != np.float64 or plane.shape != shape:
                raise ValueError("c, m, y must be matching 2-D float64 arrays")
            plane.setflags(write=False)
        if self.k.shape != shape or self.k.dtype != np.uint8:
            raise ValueError("k must be a uint8 array matching c/m/y")
        self.k.setflags(write=False)

    @property
    def height(self) -> int:
        return self.c.shape[0]

    @property
    def width(self) -> int:
        return self.c.shape[1]


def load_image(path: str | os.PathLike) -> RgbImage:
    """Decode a PNG/JPEG/BMP file into an :class:`RgbImage`.

    An alpha channel, palette, or grayscale encoding is converted to plain
    RGB; alpha is dropped, not composited.

    Raises:
        NotFound: the path does not exist.
        DecodeError: the bytes cannot be decoded as an image.
    """
    if not os.path.exists(path):
        raise NotFound(f"no such image file: {path}")
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            pixels = np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    return RgbImage(pixels)


def save_image(img: RgbImage, path: str | os.PathLike) -> None:
    """Write an RGB image; format chosen from the file extension."""
    Image.fromarray(np.asarray(img.pixels), "RGB").save(path)


def to_grayscale(img: RgbImage) -> GrayImage:
    """BT.601 luma: round(0.299 R + 0.587 G + 0.114 B), computed in integers.

    The weights sum to exactly 1000/1000, so gray pixels map to themselves.
    """
    p = img.pixels.astype(np.int32)
    luma = (_LUMA_R * p[..., 0] + _LUMA_G * p[..., 1] + _LUMA_B * p[..., 2] + 500) // 1000
    return GrayImage(luma.astype(np.uint8))


def color_balance(img: RgbImage) -> RgbImage:
    """Rescale each channel so its mean matches the grayscale mean.

    Each channel is multiplied by mean(g)/mean(channel) where g is the
    grayscale of the *original* image; results are rounded and clamped to
    [0, 255], so values pushed past 255 saturate.

    Raises:
        DegenerateChannel: some channel is identically zero (the scale
            factor would divide by zero).
    """
    gray = to_grayscale(img)
    mean_g = float(gray.values.mean(dtype=np.float64))
    channel_means = img.pixels.reshape(-1, 3).mean(axis=0, dtype=np.float64)
    if np.any(channel_means == 0.0):
        dead = "RGB"[int(np.argmin(channel_means))]
        raise DegenerateChannel(f"channel {dead} has mean 0; cannot balance")
    scale = mean_g / channel_means
    balanced = quantize_u8(img.pixels.astype(np.float64) * scale)
    return RgbImage(balanced)


def rgb_to_cmyk(img: RgbImage) -> CmykImage:
    """Convert RGB to CMYK: K = min(255-R, 255-G, 255-B), chroma normalized by 255-K.

    A pure black pixel (K = 255) has no chroma; C = M = Y = 0 there, which is
    the limit of the normalization as the channels rise from zero.
    """
    inv = 255 - img.pixels.astype(np.int32)
    k = inv.min(axis=2)
    denom = (255 - k).astype(np.float64)
    safe = denom > 0
    planes = []
    for i in range(3):
        plane = np.zeros(k.shape, dtype=np.float64)
        np.divide(inv[..., i] - k, denom, out=plane, where=safe)
        planes.append(plane)
    c, m, y = planes
    return CmykImage(c=c, m=m, y=y, k=k.astype(np.uint8))


def extract_m_channel(img: CmykImage) -> GrayImage:
    """Scale the magenta plane from [0, 1] to integer [0, 255].

    Thresholding and the user-facing threshold buttons work on a 256-bin
    domain, so the unit-interval magenta values are quantized once here.
    """
    return GrayImage(quantize_u8(img.m * 255.0))
