"""Confusion counts, the three evaluation criteria, and the alpha-sweep harness.

Sensitivity = TP/(TP+FN), precision = TP/(TP+FP), and the dice similarity
coefficient DSC = 2TP/(2TP+FP+FN).  Degenerate 0/0 ratios resolve by
convention: 1.0 when the two masks being compared are both empty (perfect
agreement), 0.0 otherwise, so every comparison yields a defined score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannel, DegenerateHistogram, EmptyDataset, InvalidAlpha, ShapeMismatch
from .image import RgbImage
from .thresholding import (
    BinaryMask,
    apply_threshold,
    combine_thresholds,
    magenta_channel,
    thresholds_from,
)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class EvalResult:
    sensitivity: float
    precision: float
    dsc: float


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    mean_sensitivity: float
    mean_precision: float
    mean_dsc: float


@dataclass(frozen=True)
class SweepReport:
    """Per-alpha aggregate metrics plus the DSC-selected best alpha."""

    rows: tuple[SweepRow, ...]
    best_alpha: float
    dataset_size: int
    failures: int

    def to_csv(self) -> str:
        lines = ["alpha,sensitivity_pct,precision_pct,dsc_pct"]
        for row in self.rows:
            lines.append(
                f"{row.alpha:g},{100 * row.mean_sensitivity:.2f},"
                f"{100 * row.mean_precision:.2f},{100 * row.mean_dsc:.2f}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "best_alpha": self.best_alpha,
            "dataset_size": self.dataset_size,
            "failures": self.failures,
            "rows": [
                {
                    "alpha": row.alpha,
                    "sensitivity_pct": round(100 * row.mean_sensitivity, 2),
                    "precision_pct": round(100 * row.mean_precision, 2),
                    "dsc_pct": round(100 * row.mean_dsc, 2),
                }
                for row in self.rows
            ],
        }
        return json.dumps(payload, indent=2) + "\n"


def confusion_counts(pred: BinaryMask, truth: BinaryMask) -> ConfusionCounts:
    """Pixelwise confusion counts between a predicted and a reference mask.

    Raises:
        ShapeMismatch: the masks differ in dimensions.
    """
    if pred.bits.shape != truth.bits.shape:
        raise ShapeMismatch(
            f"mask shapes differ: {pred.bits.shape} vs {truth.bits.shape}"
        )
    p = pred.bits
    t = truth.bits
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = p.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(num: int, den: int, both_empty: bool) -> float:
    if den == 0:
        return 1.0 if both_empty else 0.0
    return num / den


def evaluate(c: ConfusionCounts) -> EvalResult:
    """Sensitivity, precision, and DSC from confusion counts."""
    both_empty = c.tp == 0 and c.fp == 0 and c.fn == 0
    return EvalResult(
        sensitivity=_ratio(c.tp, c.tp + c.fn, both_empty),
        precision=_ratio(c.tp, c.tp + c.fp, both_empty),
        dsc=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, both_empty),
    )


def compare_masks(pred: BinaryMask, truth: BinaryMask) -> EvalResult:
    return evaluate(confusion_counts(pred, truth))


def alpha_grid(start: float = 0.0, stop: float = 1.0, step: float = 0.1) -> list[float]:
    """Inclusive arithmetic grid; the stop value is kept within 1e-9 slack.

    Grid points are rounded to 9 decimals so the canonical 0..1 step-0.1 grid
    reads 0.1, 0.2, ... rather than accumulated binary-float artifacts.
    """
    if step <= 0:
        raise ValueError(f"grid step must be positive, got {step}")
    values = []
    k = 0
    while True:
        v = round(start + k * step, 9)
        if v > stop + 1e-9:
            break
        values.append(v)
        k += 1
    return values


def alpha_sweep(
    images: list[RgbImage],
    truths: list[BinaryMask],
    alphas: list[float],
) -> SweepReport:
    """Segment every image at each alpha (offset 0) and macro-average the criteria.

    Both Otsu thresholds are independent of alpha, so they are computed once
    per image and only the fusion and cut are repeated per grid point; the
    results are identical to re-running the full pipeline.  Images whose
    color or magenta statistics are degenerate are excluded and counted in
    ``failures``.  ``best_alpha`` is the grid point with the highest mean
    DSC, ties resolving to the smallest alpha.

    Raises:
        EmptyDataset: no images given, or none survived segmentation.
        InvalidAlpha: some grid point outside [0, 1].
        ShapeMismatch: images and truths not aligned.
    """
    if len(images) != len(truths):
        raise ShapeMismatch(f"{len(images)} images vs {len(truths)} truths")
    if not images:
        raise EmptyDataset("alpha sweep needs at least one image")
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise InvalidAlpha(f"alpha must be in [0, 1], got {a}")
    if not alphas:
        raise EmptyDataset("alpha sweep needs at least one alpha")

    prepared = []  # (m_channel, thv1, thv2, truth)
    failures = 0
    for img, truth in zip(images, truths):
        try:
            m = magenta_channel(img)
            tset = thresholds_from(m, alpha=0.0)
        except (DegenerateChannel, DegenerateHistogram):
            failures += 1
            continue
        prepared.append((m, tset.thv1, tset.thv2, truth))
    if not prepared:
        raise EmptyDataset("every image failed to segment")

    rows = []
    for a in alphas:
        sums = np.zeros(3, dtype=np.float64)
        for m, thv1, thv2, truth in prepared:
            uthv = combine_thresholds(thv1, thv2, a)
            effective = min(255.0, max(0.0, uthv))
            result = compare_masks(apply_threshold(m, effective), truth)
            sums += (result.sensitivity, result.precision, result.dsc)
        mean = sums / len(prepared)
        rows.append(SweepRow(alpha=a, mean_sensitivity=mean[0], mean_precision=mean[1], mean_dsc=mean[2]))

    best = min(rows, key=lambda r: (-r.mean_dsc, r.alpha))
    return SweepReport(
        rows=tuple(rows),
        best_alpha=best.alpha,
        dataset_size=len(images),
        failures=failures,
    )
