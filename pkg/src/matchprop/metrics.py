"""Evaluation: region similarity, contour accuracy, and keyframe transfer error."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import ndimage

from .types import (
    Config,
    ContractViolation,
    EmptyPredictionError,
    FeatureMap,
    LabelMask,
)


@dataclass(frozen=True)
class SequenceScore:
    per_frame: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_frame)) if self.per_frame else float("nan")


def _binary_pair(pred: LabelMask, gt: LabelMask) -> tuple[np.ndarray, np.ndarray]:
    if pred.labels.shape != gt.labels.shape:
        raise ContractViolation(
            f"shape mismatch: pred {pred.labels.shape} vs gt {gt.labels.shape}"
        )
    return pred.labels > 0, gt.labels > 0


def jaccard(pred: LabelMask, gt: LabelMask) -> float:
    """Intersection over union; two empty masks agree perfectly (1.0)."""
    p, g = _binary_pair(pred, gt)
    union = int(np.count_nonzero(p | g))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(p & g)) / union


def contour_points(fg: np.ndarray) -> np.ndarray:
    """4-connected boundary: foreground pixels touching background or the image edge."""
    interior = (
        np.roll(fg, 1, axis=0)
        & np.roll(fg, -1, axis=0)
        & np.roll(fg, 1, axis=1)
        & np.roll(fg, -1, axis=1)
    )
    interior[0, :] = interior[-1, :] = False
    interior[:, 0] = interior[:, -1] = False
    return fg & ~interior


def default_contour_tolerance(height: int, width: int) -> float:
    """Half a percent of the image diagonal, rounded up."""
    return float(math.ceil(0.005 * math.hypot(width, height)))


def contour_f(pred: LabelMask, gt: LabelMask, tolerance: Optional[float] = None) -> float:
    """F-1 of distance-thresholded contour matching between pred and gt.

    Precision: fraction of predicted contour points within `tolerance` of the
    ground-truth contour; recall symmetric. Two empty contours score 1.0.
    """
    p, g = _binary_pair(pred, gt)
    if tolerance is None:
        tolerance = default_contour_tolerance(*p.shape)
    if tolerance < 0:
        raise ContractViolation(f"tolerance must be >= 0, got {tolerance}")
    pc = contour_points(p)
    gc = contour_points(g)
    if not pc.any() and not gc.any():
        return 1.0
    if not pc.any() or not gc.any():
        return 0.0
    dist_to_g = ndimage.distance_transform_edt(~gc)
    dist_to_p = ndimage.distance_transform_edt(~pc)
    precision = float(np.count_nonzero(dist_to_g[pc] <= tolerance)) / np.count_nonzero(pc)
    recall = float(np.count_nonzero(dist_to_p[gc] <= tolerance)) / np.count_nonzero(gc)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def jumpcut_error(pred: LabelMask, gt: LabelMask) -> float:
    """Mislabelled pixels divided by the predicted foreground count."""
    p, g = _binary_pair(pred, gt)
    denom = int(np.count_nonzero(p))
    if denom == 0:
        raise EmptyPredictionError("prediction has no foreground pixels; error undefined")
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return (fp + fn) / denom


DEFAULT_KEYFRAMES = tuple(range(0, 97, 16))


def jumpcut_protocol(
    features: Sequence[FeatureMap],
    gt_masks: Mapping[int, LabelMask],
    cfg: Config,
    keyframes: Sequence[int] = DEFAULT_KEYFRAMES,
    transfer_distance: int = 16,
) -> dict:
    """Keyframe-template transfer evaluation.

    For each keyframe i (0-based into the sequence) with ground truth at i
    and i+d, the pipeline restarts from the keyframe's ground truth and
    propagates d frames; the prediction at i+d is scored. Outlier removal is
    disabled: it would anchor the mask to near-identity motion between
    non-adjacent frames. Keyframes past the end of the sequence, without
    ground truth, or with empty predictions are skipped with a warning.
    """
    from .pipeline import propagate  # local import: pipeline depends on lower layers only

    run_cfg = cfg.with_overrides(outlier_removal_enabled=False)
    per_keyframe: list[dict] = []
    notes: list[str] = []
    errors: list[float] = []
    for i in keyframes:
        target = i + transfer_distance
        if target >= len(features):
            notes.append(f"keyframe {i}: sequence too short for frame {target}, skipped")
            continue
        if i not in gt_masks or target not in gt_masks:
            notes.append(f"keyframe {i}: missing ground truth at {i} or {target}, skipped")
            continue
        result = propagate(features[i : target + 1], gt_masks[i], run_cfg)
        pred = result.masks[-1]
        try:
            err = jumpcut_error(pred, gt_masks[target])
        except EmptyPredictionError:
            notes.append(f"keyframe {i}: empty prediction at frame {target}, excluded")
            continue
        errors.append(err)
        per_keyframe.append({"keyframe": i, "target": target, "error": err})
    for note in notes:
        warnings.warn(note, stacklevel=2)
    return {
        "error_rate": float(np.mean(errors)) if errors else float("nan"),
        "per_keyframe": per_keyframe,
        "warnings": notes,
    }
