import numpy as np
import pytest

from easygt import InvalidSpec
from easygt.phantom import PhantomSpec, default_suite, generate_phantom


def test_seeded_determinism():
    spec = PhantomSpec(width=96, height=96, lobes=1, seed=42)
    img_a, mask_a = generate_phantom(spec)
    img_b, mask_b = generate_phantom(spec)
    assert np.array_equal(img_a.pixels, img_b.pixels)
    assert np.array_equal(mask_a.bits, mask_b.bits)


def test_different_seeds_differ():
    a, _ = generate_phantom(PhantomSpec(width=96, height=96, seed=1))
    b, _ = generate_phantom(PhantomSpec(width=96, height=96, seed=2))
    assert not np.array_equal(a.pixels, b.pixels)


def test_mask_is_union_of_explicit_ellipses():
    ellipses = ((30.0, 40.0, 12.0, 8.0, 0.3), (60.0, 50.0, 10.0, 7.0, 1.1), (45.0, 60.0, 9.0, 6.0, 2.0))
    spec = PhantomSpec(width=96, height=96, ellipses=ellipses, seed=9)
    _, mask = generate_phantom(spec)
    yy, xx = np.mgrid[0:96, 0:96]
    expected = np.zeros((96, 96), dtype=bool)
    for cx, cy, a, b, theta in ellipses:
        u = (xx - cx) * np.cos(theta) + (yy - cy) * np.sin(theta)
        v = -(xx - cx) * np.sin(theta) + (yy - cy) * np.cos(theta)
        expected |= (u / a) ** 2 + (v / b) ** 2 <= 1.0
    assert np.array_equal(mask.bits, expected)


def test_mask_dimensions_match_image():
    img, mask = generate_phantom(PhantomSpec(width=120, height=80, seed=3))
    assert (img.height, img.width) == (80, 120)
    assert (mask.height, mask.width) == (80, 120)
    assert mask.nucleus_pixels() > 0


@pytest.mark.parametrize("lobes", [0, 6, -1])
def test_invalid_lobe_count(lobes):
    with pytest.raises(InvalidSpec):
        generate_phantom(PhantomSpec(width=96, height=96, lobes=lobes, seed=1))


def test_out_of_frame_nucleus_rejected():
    huge = ((48.0, 48.0, 80.0, 60.0, 0.0),)
    with pytest.raises(InvalidSpec):
        generate_phantom(PhantomSpec(width=96, height=96, ellipses=huge, seed=1))


def test_empty_nucleus_rejected():
    # sub-pixel ellipse centered between grid points rasterizes to nothing
    tiny = ((30.5, 30.5, 0.2, 0.2, 0.0),)
    with pytest.raises(InvalidSpec):
        generate_phantom(PhantomSpec(width=96, height=96, ellipses=tiny, seed=1))


def test_default_suite_cycles_lobes_and_is_deterministic():
    suite_a = default_suite(5, seed=42)
    suite_b = default_suite(5, seed=42)
    for (img_a, mask_a), (img_b, mask_b) in zip(suite_a, suite_b):
        assert np.array_equal(img_a.pixels, img_b.pixels)
        assert np.array_equal(mask_a.bits, mask_b.bits)
    assert all(img.width == 575 and img.height == 575 for img, _ in suite_a)


def test_default_suite_rejects_empty():
    with pytest.raises(InvalidSpec):
        default_suite(0)
