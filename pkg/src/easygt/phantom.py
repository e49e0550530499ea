"""Seeded synthetic blood-smear phantoms with exact ground-truth masks.

Each phantom is a stained-cell-like image: pale pink background, scattered
red-cell discs, and a dark purple nucleus built from 1-5 overlapping
ellipse lobes.  The ground-truth mask is exactly the rasterized lobe union,
so every evaluation in the test suite is self-contained and reproducible
from a single 64-bit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .image import RgbImage, quantize_u8
from .thresholding import BinaryMask

# (cx, cy, semi_axis_a, semi_axis_b, rotation_radians)
Ellipse = tuple[float, float, float, float, float]


@dataclass(frozen=True)
class PhantomSpec:
    """Parameters for one phantom; identical specs generate identical bytes."""

    width: int = 575
    height: int = 575
    lobes: int = 3
    nucleus_scale: float = 0.12  # lobe radius relative to min(width, height)
    nucleus_color: tuple[float, float, float] = (110.0, 50.0, 144.0)
    nucleus_sigma: float = 11.0
    background_color: tuple[float, float, float] = (243.0, 227.0, 238.0)
    background_sigma: float = 4.0
    cell_color: tuple[float, float, float] = (234.0, 158.0, 176.0)
    cell_sigma: float = 4.0
    cell_count: int = 13
    noise_sigma: float = 4.0
    seed: int = 0
    ellipses: tuple[Ellipse, ...] | None = None  # explicit geometry overrides lobes


def _ellipse_extents(e: Ellipse) -> tuple[float, float]:
    """Half-width and half-height of the rotated ellipse's bounding box."""
    _, _, a, b, theta = e
    half_x = math.hypot(a * math.cos(theta), b * math.sin(theta))
    half_y = math.hypot(a * math.sin(theta), b * math.cos(theta))
    return half_x, half_y


def _sample_geometry(spec: PhantomSpec, rng: np.random.Generator) -> tuple[Ellipse, ...]:
    if not 1 <= spec.lobes <= 5:
        raise InvalidSpec(f"lobe count must be 1..5, got {spec.lobes}")
    dim = min(spec.width, spec.height)
    base_r = spec.nucleus_scale * dim
    cx = spec.width / 2 + rng.uniform(-0.05, 0.05) * dim
    cy = spec.height / 2 + rng.uniform(-0.05, 0.05) * dim
    k = spec.lobes
    lobe_r = base_r * (1.0 if k == 1 else 1.2 / math.sqrt(k))
    spread = 0.0 if k == 1 else base_r * (0.40 + 0.09 * k)
    phase = rng.uniform(0.0, 2 * math.pi)
    ellipses = []
    for j in range(k):
        angle = phase + 2 * math.pi * j / k
        ex = cx + spread * math.cos(angle)
        ey = cy + spread * math.sin(angle)
        a = lobe_r * rng.uniform(0.80, 1.05)
        b = lobe_r * rng.uniform(0.60, 0.85)
        theta = rng.uniform(0.0, math.pi)
        ellipses.append((ex, ey, a, b, theta))
    return tuple(ellipses)


def _rasterize(ellipses: tuple[Ellipse, ...], width: int, height: int) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width]
    inside = np.zeros((height, width), dtype=bool)
    for cx, cy, a, b, theta in ellipses:
        dx = xx - cx
        dy = yy - cy
        u = dx * math.cos(theta) + dy * math.sin(theta)
        v = -dx * math.sin(theta) + dy * math.cos(theta)
        inside |= (u / a) ** 2 + (v / b) ** 2 <= 1.0
    return inside


def generate_phantom(spec: PhantomSpec) -> tuple[RgbImage, BinaryMask]:
    """Render one phantom and its exact nucleus mask.

    The draw order (geometry, cells, background, nucleus, global noise) is
    fixed, so a given seed always produces the same bytes.

    Raises:
        InvalidSpec: lobe count out of range, nucleus empty, or any lobe
            extending past the frame.
    """
    if spec.width < 1 or spec.height < 1:
        raise InvalidSpec("phantom dimensions must be positive")
    rng = np.random.default_rng(spec.seed)
    ellipses = spec.ellipses if spec.ellipses is not None else _sample_geometry(spec, rng)
    for e in ellipses:
        half_x, half_y = _ellipse_extents(e)
        if not (0 <= e[0] - half_x and e[0] + half_x <= spec.width - 1
                and 0 <= e[1] - half_y and e[1] + half_y <= spec.height - 1):
            raise InvalidSpec(f"nucleus lobe exceeds the frame: {e}")
    mask = _rasterize(ellipses, spec.width, spec.height)
    if not mask.any():
        raise InvalidSpec("nucleus region rasterized to zero pixels")

    h, w = spec.height, spec.width
    img = rng.normal(spec.background_color, spec.background_sigma, size=(h, w, 3))

    yy, xx = np.mgrid[0:h, 0:w]
    dim = min(w, h)
    for _ in range(spec.cell_count):
        ccx = rng.uniform(0, w)
        ccy = rng.uniform(0, h)
        radius = rng.uniform(0.055, 0.095) * dim
        tint = rng.normal(spec.cell_color, 5.0)
        disc = (xx - ccx) ** 2 + (yy - ccy) ** 2 <= radius**2
        img[disc] = rng.normal(tint, spec.cell_sigma, size=(int(disc.sum()), 3))

    img[mask] = rng.normal(spec.nucleus_color, spec.nucleus_sigma, size=(int(mask.sum()), 3))
    img += rng.normal(0.0, spec.noise_sigma, size=(h, w, 3))

    return RgbImage(quantize_u8(img)), BinaryMask(mask)


def default_suite(count: int = 50, seed: int = 42) -> list[tuple[RgbImage, BinaryMask]]:
    """The bundled evaluation suite: ``count`` phantoms cycling 1-5 lobes.

    Per-phantom seeds are derived from the suite seed, so (count, seed)
    fully determines every byte of every image and mask.
    """
    if count < 1:
        raise InvalidSpec(f"suite needs at least one phantom, got {count}")
    child_seeds = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    suite = []
    for i in range(count):
        spec = PhantomSpec(lobes=1 + i % 5, seed=int(child_seeds[i]))
        suite.append(generate_phantom(spec))
    return suite
