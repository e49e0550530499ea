"""Walk one image through every stage of the segmentation pipeline.

Generates a phantom, then shows what each transform does to it: color
balancing, CMYK conversion, magenta extraction, the two Otsu splits, the
fused threshold, and the final mask.  Writes the stage images next to this
script so you can eyeball them.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from easygt import (
    apply_threshold,
    build_histogram,
    color_balance,
    combine_thresholds,
    compare_masks,
    extract_m_channel,
    otsu_three_class,
    otsu_two_class,
    rgb_to_cmyk,
)
from easygt.phantom import PhantomSpec, generate_phantom

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

image, truth = generate_phantom(PhantomSpec(seed=7, lobes=3))
Image.fromarray(np.asarray(image.pixels)).save(out_dir / "stage0_input.png")

balanced = color_balance(image)
Image.fromarray(np.asarray(balanced.pixels)).save(out_dir / "stage1_balanced.png")

cmyk = rgb_to_cmyk(balanced)
m = extract_m_channel(cmyk)
Image.fromarray(np.asarray(m.values)).save(out_dir / "stage2_magenta.png")

hist = build_histogram(m, ignore_zero=True)
thv1 = otsu_two_class(hist)
_, thv2 = otsu_three_class(hist)
alpha = 0.3
uthv = combine_thresholds(thv1, thv2, alpha)
print(f"two-class split  THV1 = {thv1:.0f}")
print(f"three-class top  THV2 = {thv2:.0f}")
print(f"fused at a={alpha}  UTHV = {uthv:.1f}")

mask = apply_threshold(m, uthv)
Image.fromarray(np.where(mask.bits, 255, 0).astype(np.uint8)).save(out_dir / "stage3_mask.png")

score = compare_masks(mask, truth)
print(f"against ground truth: sensitivity {score.sensitivity:.1%}, "
      f"precision {score.precision:.1%}, DSC {score.dsc:.1%}")
print(f"stage images written to {out_dir}")
