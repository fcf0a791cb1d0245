"""From score maps to probabilities and binary masks."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .types import ContractViolation, LabelMask, ProbabilityMap
from .matching import ScoreMap


def upsample(scores: ScoreMap, width: int, height: int, stride: int) -> np.ndarray:
    """Bilinearly upsample a grid of scores to full resolution.

    Interpolation nodes sit at stride offsets (cell r,c maps to pixel
    r*stride, c*stride), so the output is exact at those pixels; values
    beyond the last node extend the edge. Output stays within the input's
    [min, max].
    """
    if width < scores.width or height < scores.height:
        raise ContractViolation(
            f"target {width}x{height} smaller than grid {scores.width}x{scores.height}"
        )
    grid = scores.scores.astype(np.float64)
    gy = np.minimum(np.arange(height) / stride, scores.height - 1)
    gx = np.minimum(np.arange(width) / stride, scores.width - 1)
    y0 = np.floor(gy).astype(np.int64)
    x0 = np.floor(gx).astype(np.int64)
    y1 = np.minimum(y0 + 1, scores.height - 1)
    x1 = np.minimum(x0 + 1, scores.width - 1)
    wy = (gy - y0)[:, None]
    wx = (gx - x0)[None, :]
    top = grid[y0][:, x0] * (1 - wx) + grid[y0][:, x1] * wx
    bottom = grid[y1][:, x0] * (1 - wx) + grid[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def fg_probability(
    fg_scores: np.ndarray,
    bg_scores: np.ndarray,
    fg_weight: float = 1.0,
    bg_weight: float = 1.0,
    temperature: float = 1.0,
) -> ProbabilityMap:
    """Two-way weighted softmax over upsampled FG/BG score grids."""
    fg_scores = np.asarray(fg_scores, dtype=np.float64)
    bg_scores = np.asarray(bg_scores, dtype=np.float64)
    if fg_scores.shape != bg_scores.shape:
        raise ContractViolation("FG and BG score grids must have the same shape")
    if temperature <= 0:
        raise ContractViolation("temperature must be positive")
    z = (fg_weight * fg_scores - bg_weight * bg_scores) / temperature
    return ProbabilityMap(expit(z))


def threshold(prob: ProbabilityMap, cutoff: float = 0.5) -> LabelMask:
    """Binarize with a strict '>' so an exactly ambivalent pixel stays background."""
    if not (0.0 < cutoff < 1.0):
        raise ContractViolation(f"cutoff must lie in (0, 1), got {cutoff}")
    return LabelMask((prob.values > cutoff).astype(np.uint8), object_count=1)
