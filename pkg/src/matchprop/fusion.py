"""Fuse per-object probability maps into one label mask."""

from __future__ import annotations

import numpy as np

from .types import ContractViolation, LabelMask, ProbabilityMap


def fuse(prob_maps: list[ProbabilityMap], bg_cutoff: float) -> LabelMask:
    """Per-pixel argmax over objects, background when every probability < cutoff.

    Argmax ties go to the smallest object index. The foreground condition is
    `max >= cutoff`: only pixels where every object scores strictly below the
    cutoff become background.
    """
    if not prob_maps:
        raise ContractViolation("fuse needs at least one probability map")
    if not (0.0 < bg_cutoff < 1.0):
        raise ContractViolation(f"bg_cutoff must lie in (0, 1), got {bg_cutoff}")
    shape = prob_maps[0].values.shape
    for p in prob_maps[1:]:
        if p.values.shape != shape:
            raise ContractViolation("probability maps must share one shape")
    stack = np.stack([p.values for p in prob_maps])
    winner = stack.argmax(axis=0)  # first occurrence wins ties -> smallest k
    best = np.take_along_axis(stack, winner[None], axis=0)[0]
    labels = np.where(best >= bg_cutoff, winner + 1, 0)
    return LabelMask(labels.astype(np.int64), object_count=len(prob_maps))
