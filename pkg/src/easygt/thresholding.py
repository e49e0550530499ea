"""Histogram construction, two- and three-class Otsu searches, threshold fusion.

Otsu's criterion ranks candidate thresholds by between-class variance.  All
histogram moments are integers, so the searches here compare candidate scores
with exact integer cross-multiplication instead of floats: the returned argmax
is platform-independent and ties genuinely break toward the smallest
threshold, as the contract requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateHistogram, InvalidAlpha
from .image import GrayImage, RgbImage, color_balance, extract_m_channel, rgb_to_cmyk

_LEVELS = 256


@dataclass(frozen=True)
class Histogram:
    """Intensity histogram over the 256 8-bit levels.

    ``zero_ignored`` records whether bin 0 was forced to zero (nuclei never
    sit at intensity 0, and zero-intensity pixels would otherwise swamp the
    class statistics).
    """

    counts: np.ndarray
    total: int
    zero_ignored: bool

    def __post_init__(self) -> None:
        if self.counts.shape != (_LEVELS,) or self.counts.dtype != np.int64:
            raise ValueError("counts must be an int64 array of length 256")
        self.counts.setflags(write=False)

    def nonempty_bins(self) -> int:
        return int(np.count_nonzero(self.counts))


@dataclass(frozen=True)
class ThresholdSet:
    """The threshold triple plus the per-image user offset.

    ``uthv`` is the convex fusion alpha*thv1 + (1-alpha)*thv2 and is kept as
    a real number; rounding it would blur the alpha sweep.  ``effective`` is
    what masks are actually cut at: uthv shifted by the user offset, clamped
    into the 8-bit intensity range.
    """

    thv1: float
    thv2: float
    alpha: float
    uthv: float
    user_offset: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidAlpha(f"alpha must be in [0, 1], got {self.alpha}")

    @property
    def effective(self) -> float:
        return min(255.0, max(0.0, self.uthv + self.user_offset))


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel nucleus/background decision; ``bits`` is a bool (H, W) array."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.bits.ndim != 2 or self.bits.dtype != np.bool_:
            raise ValueError(f"expected (H, W) bool array, got shape={self.bits.shape} dtype={self.bits.dtype}")
        self.bits.setflags(write=False)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def nucleus_pixels(self) -> int:
        return int(np.count_nonzero(self.bits))


def build_histogram(img: GrayImage, ignore_zero: bool = False) -> Histogram:
    """Count pixels per intensity; optionally drop the zero bin entirely."""
    counts = np.bincount(img.values.ravel(), minlength=_LEVELS).astype(np.int64)
    if ignore_zero:
        counts[0] = 0
    return Histogram(counts=counts, total=int(counts.sum()), zero_ignored=ignore_zero)


def otsu_two_class(hist: Histogram) -> float:
    """Exhaustive two-class Otsu split; returns the lower-class bound THV1.

    Maximizes w0*w1*(mu0 - mu1)^2 over t in [0, 254] with class 0 = {v <= t}.
    For prefix count c0, prefix first moment s0 (and complements c1, s1) the
    criterion is proportional to (s0*c1 - s1*c0)^2 / (c0*c1), which is
    compared exactly across candidates; the smallest maximizing t wins.

    Raises:
        DegenerateHistogram: fewer than two non-empty bins, no split exists.
    """
    if hist.nonempty_bins() < 2:
        raise DegenerateHistogram("two-class split needs at least 2 non-empty bins")
    counts = hist.counts.tolist()
    n = hist.total
    s_total = int(np.dot(np.arange(_LEVELS, dtype=np.int64), hist.counts))

    best_t = -1
    best_num = 0  # score numerator (s0*c1 - s1*c0)^2
    best_den = 1  # score denominator c0*c1
    c0 = 0
    s0 = 0
    for t in range(_LEVELS - 1):
        c0 += counts[t]
        s0 += t * counts[t]
        c1 = n - c0
        if c0 == 0:
            continue
        if c1 == 0:
            break
        diff = s0 * c1 - (s_total - s0) * c0
        num = diff * diff
        den = c0 * c1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return float(best_t)


def otsu_three_class(hist: Histogram) -> tuple[float, float]:
    """Exhaustive three-class Otsu split; returns (lower, upper) thresholds.

    Searches all pairs t1 < t2 for the maximum between-class variance of the
    classes [0..t1], (t1..t2], (t2..255].  A vectorized float pass ranks all
    ~32k pairs, then every pair within a 1e-9 relative band of the float
    maximum is re-compared with exact integer arithmetic, so float roundoff
    can never pick a wrong pair and ties break to the lexicographically
    smallest (t1, t2).  The upper element is THV2.

    Raises:
        DegenerateHistogram: fewer than three non-empty bins.
    """
    if hist.nonempty_bins() < 3:
        raise DegenerateHistogram("three-class split needs at least 3 non-empty bins")
    counts = hist.counts
    n = hist.total
    levels = np.arange(_LEVELS, dtype=np.int64)
    cum_c = np.cumsum(counts)
    cum_s = np.cumsum(levels * counts)
    s_total = int(cum_s[-1])

    # Between-class variance is a monotone transform of sum_k s_k^2 / c_k
    # (empty classes contribute zero), which needs only the prefix moments.
    c_at = cum_c[: _LEVELS - 1].astype(np.float64)
    s_at = cum_s[: _LEVELS - 1].astype(np.float64)
    c0 = c_at[:, None]
    s0 = s_at[:, None]
    c1 = c_at[None, :] - c0
    s1 = s_at[None, :] - s0
    c2 = float(n) - c_at[None, :]
    s2 = float(s_total) - s_at[None, :]

    score = np.zeros((_LEVELS - 1, _LEVELS - 1), dtype=np.float64)
    for ck, sk in ((c0, s0), (c1, s1), (c2, s2)):
        term = np.zeros_like(score)
        np.divide(sk * sk, ck, out=term, where=ck > 0)
        score += np.broadcast_to(term, score.shape)
    score[np.tril_indices(_LEVELS - 1)] = -1.0  # require t1 < t2

    peak = float(score.max())
    band = score >= peak - abs(peak) * 1e-9
    band[np.tril_indices(_LEVELS - 1)] = False
    candidates = np.argwhere(band)  # row-major order == lexicographic (t1, t2)

    cc = cum_c.tolist()
    cs = cum_s.tolist()
    best: tuple[int, int] | None = None
    best_num = 0
    best_den = 1
    for t1, t2 in candidates:
        t1 = int(t1)
        t2 = int(t2)
        parts_c = (cc[t1], cc[t2] - cc[t1], n - cc[t2])
        parts_s = (cs[t1], cs[t2] - cs[t1], s_total - cs[t2])
        den = 1
        for ck in parts_c:
            if ck > 0:
                den *= ck
        num = 0
        for ck, sk in zip(parts_c, parts_s):
            if ck > 0:
                num += sk * sk * (den // ck)
        if best is None or num * best_den > best_num * den:
            best, best_num, best_den = (t1, t2), num, den
    assert best is not None
    return (float(best[0]), float(best[1]))


def combine_thresholds(thv1: float, thv2: float, alpha: float) -> float:
    """Convex fusion of the two Otsu thresholds: alpha*thv1 + (1-alpha)*thv2.

    Kept as a real number — no rounding.

    Raises:
        InvalidAlpha: alpha outside [0, 1].
    """
    if not 0.0 <= alpha <= 1.0 or math.isnan(alpha):
        raise InvalidAlpha(f"alpha must be in [0, 1], got {alpha}")
    return alpha * thv1 + (1.0 - alpha) * thv2


def apply_threshold(img: GrayImage, threshold: float) -> BinaryMask:
    """Mark as nucleus every pixel strictly above the threshold.

    Nuclei are the high-magenta class, so foreground sits above the cut.
    """
    return BinaryMask(img.values > threshold)


def magenta_channel(img: RgbImage) -> GrayImage:
    """Pipeline prefix shared by segmentation and the sweep harness.

    color balance -> CMYK -> magenta plane scaled to [0, 255].

    Raises:
        DegenerateChannel: propagated from color balancing.
    """
    return extract_m_channel(rgb_to_cmyk(color_balance(img)))


def thresholds_from(m: GrayImage, alpha: float, user_offset: int = 0) -> ThresholdSet:
    """Run both Otsu searches on the magenta channel and fuse them.

    The histogram drops the zero bin: zero-magenta pixels carry no nucleus
    signal and would otherwise distort both splits.

    Raises:
        DegenerateHistogram: the magenta histogram cannot support both splits.
        InvalidAlpha: alpha outside [0, 1].
    """
    hist = build_histogram(m, ignore_zero=True)
    thv1 = otsu_two_class(hist)
    _, thv2 = otsu_three_class(hist)
    uthv = combine_thresholds(thv1, thv2, alpha)
    return ThresholdSet(thv1=thv1, thv2=thv2, alpha=alpha, uthv=uthv, user_offset=user_offset)


def segment(img: RgbImage, alpha: float = 0.3, user_offset: int = 0) -> tuple[BinaryMask, ThresholdSet]:
    """Full deterministic pipeline from RGB input to nucleus mask.

    Returns the mask cut at the effective threshold (uthv + user_offset,
    clamped to [0, 255]) together with the complete threshold set for
    display and persistence.

    Raises:
        DegenerateChannel, DegenerateHistogram: the image has no usable
            color or magenta statistics; callers treat this as
            failed-eligible rather than a crash.
        InvalidAlpha: alpha outside [0, 1].
    """
    m = magenta_channel(img)
    tset = thresholds_from(m, alpha, user_offset)
    mask = apply_threshold(m, tset.effective)
    return mask, tset
