"""Mask morphology on exact Euclidean distances: extrusion, erosion, outlier removal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .types import ContractViolation, LabelMask, binary_mask


@dataclass(frozen=True)
class DistanceField:
    """Per-pixel Euclidean distance to the nearest foreground pixel of a source mask.

    Zero exactly on the source foreground; +inf everywhere when the source is empty.
    """

    values: np.ndarray

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _as_foreground(mask: LabelMask) -> np.ndarray:
    if not mask.is_binary():
        raise ContractViolation(f"expected a binary mask, got {mask.object_count} objects")
    return mask.labels > 0


def distance_transform(mask: LabelMask) -> DistanceField:
    """Exact Euclidean distance to the nearest foreground pixel."""
    fg = _as_foreground(mask)
    if not fg.any():
        return DistanceField(np.full(fg.shape, np.inf))
    return DistanceField(ndimage.distance_transform_edt(~fg))


def extrude(mask: LabelMask, radius: float) -> LabelMask:
    """Grow the mask to every pixel strictly closer than `radius` to it."""
    if radius < 0:
        raise ContractViolation(f"radius must be >= 0, got {radius}")
    fg = _as_foreground(mask)
    if not fg.any() or radius == 0:
        return binary_mask(fg)
    dist = ndimage.distance_transform_edt(~fg)
    return binary_mask(fg | (dist < radius))


def erode(mask: LabelMask, radius: float) -> LabelMask:
    """Keep pixels whose distance to the nearest background pixel exceeds `radius`."""
    if radius < 0:
        raise ContractViolation(f"radius must be >= 0, got {radius}")
    fg = _as_foreground(mask)
    if fg.all() or not fg.any():
        return binary_mask(fg)  # no boundary to erode from
    dist_to_bg = ndimage.distance_transform_edt(fg)
    return binary_mask(fg & (dist_to_bg > radius))


def remove_outliers(
    y_init: LabelMask,
    prev: LabelMask,
    radius: float,
    componentwise: bool = False,
) -> LabelMask:
    """Drop initial foreground that falls outside the extruded previous prediction.

    Pixelwise intersection by default; with `componentwise`, whole 4-connected
    components of y_init survive iff they touch the extrusion. An empty
    previous mask disables the filter for this frame so a total occlusion
    cannot erase the object permanently.
    """
    init_fg = _as_foreground(y_init)
    prev_fg = _as_foreground(prev)
    if init_fg.shape != prev_fg.shape:
        raise ContractViolation("y_init and previous mask shapes differ")
    if not prev_fg.any():
        return binary_mask(init_fg)
    allowed = _as_foreground(extrude(prev, radius))
    if not componentwise:
        return binary_mask(init_fg & allowed)
    labelled, count = ndimage.label(init_fg)  # 4-connected components
    keep = np.zeros_like(init_fg)
    for comp in range(1, count + 1):
        sel = labelled == comp
        if (sel & allowed).any():
            keep |= sel
    return binary_mask(keep)
