"""Initial FG/BG bank construction from the template, and online bank growth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .morphology import erode
from .types import (
    ORIGIN_ONLINE,
    ORIGIN_TEMPLATE,
    Config,
    ContractViolation,
    DegenerateTemplateError,
    FeatureBank,
    FeatureMap,
    LabelMask,
    ProbabilityMap,
    downsample_labels,
)


@dataclass
class ObjectBanks:
    """Foreground and background appearance banks for one object."""

    object_id: int
    fg: FeatureBank
    bg: FeatureBank


def build_banks(frame: FeatureMap, template: LabelMask) -> list[ObjectBanks]:
    """Split the first frame's feature grid into per-object FG/BG banks.

    For object k, FG holds features at grid cells the downsampled template
    assigns to k, BG holds every other cell (other objects included). An
    object with no cells after downsampling is a hard error: the template is
    too thin for this feature resolution.
    """
    if template.object_count < 1:
        raise ContractViolation("template contains no objects")
    grid = downsample_labels(template, frame.height, frame.width, frame.stride)
    flat = grid.ravel()
    features = frame.flat()
    banks = []
    for k in range(1, template.object_count + 1):
        fg_cells = np.flatnonzero(flat == k)
        if fg_cells.size == 0:
            raise DegenerateTemplateError(k)
        bg_cells = np.flatnonzero(flat != k)
        fg = FeatureBank(frame.channels)
        fg.append(features[fg_cells], ORIGIN_TEMPLATE, frame=1, cells=fg_cells)
        bg = FeatureBank(frame.channels)
        if bg_cells.size:
            bg.append(features[bg_cells], ORIGIN_TEMPLATE, frame=1, cells=bg_cells)
        banks.append(ObjectBanks(k, fg, bg))
    return banks


@dataclass(frozen=True)
class UpdateReport:
    """What one frame's online update did (and would have done when disabled)."""

    frame: int
    bg_candidates: tuple[int, ...]  # b_t, flat grid cells
    fg_candidates: tuple[int, ...]
    bg_added: int
    fg_added: int

    def __post_init__(self):
        if set(self.bg_candidates) & set(self.fg_candidates):
            raise ContractViolation("a cell cannot feed both banks in the same frame")

    def to_json(self) -> dict:
        return {
            "frame": self.frame,
            "bg_candidates": list(self.bg_candidates),
            "fg_candidates": list(self.fg_candidates),
            "bg_added": self.bg_added,
            "fg_added": self.fg_added,
        }


def _grid_cells(mask: LabelMask, frame: FeatureMap) -> np.ndarray:
    grid = downsample_labels(mask, frame.height, frame.width, frame.stride)
    return np.flatnonzero(grid.ravel() == 1)


def _sample_at_cell_anchors(prob: ProbabilityMap, cells: np.ndarray, frame: FeatureMap) -> np.ndarray:
    rows = np.minimum((cells // frame.width) * frame.stride, prob.height - 1)
    cols = np.minimum((cells % frame.width) * frame.stride, prob.width - 1)
    return prob.values[rows, cols]


def update_banks(
    frame: FeatureMap,
    y_init: LabelMask,
    y_t: LabelMask,
    prob: ProbabilityMap,
    banks: ObjectBanks,
    cfg: Config,
    frame_index: int,
) -> UpdateReport:
    """Grow one object's banks after a frame.

    BG gains features at cells predicted foreground initially but absent from
    the final mask. FG gains cells of the eroded final mask whose probability
    at the cell anchor exceeds the confidence threshold and that are not BG
    candidates. Disabled updates still report their candidate sets.
    """
    if banks.fg.channels != frame.channels or banks.bg.channels != frame.channels:
        raise ContractViolation("bank channel count differs from the frame's")
    init_cells = _grid_cells(y_init, frame)
    final_cells = _grid_cells(y_t, frame)
    bg_candidates = np.setdiff1d(init_cells, final_cells, assume_unique=True)

    eroded = erode(y_t, cfg.erosion_radius)
    eroded_cells = _grid_cells(eroded, frame)
    if eroded_cells.size:
        confident = _sample_at_cell_anchors(prob, eroded_cells, frame) > cfg.fg_update_confidence
        fg_candidates = np.setdiff1d(eroded_cells[confident], bg_candidates, assume_unique=True)
    else:
        fg_candidates = np.empty(0, dtype=np.int64)

    features = frame.flat()
    bg_added = fg_added = 0
    if cfg.bg_update_enabled and bg_candidates.size:
        banks.bg.append(features[bg_candidates], ORIGIN_ONLINE, frame_index, bg_candidates)
        bg_added = int(bg_candidates.size)
    if cfg.fg_update_enabled and fg_candidates.size:
        banks.fg.append(features[fg_candidates], ORIGIN_ONLINE, frame_index, fg_candidates)
        fg_added = int(fg_candidates.size)
    if cfg.bank_capacity is not None:
        banks.bg.evict_to_capacity(cfg.bank_capacity)
        banks.fg.evict_to_capacity(cfg.bank_capacity)
    return UpdateReport(
        frame=frame_index,
        bg_candidates=tuple(int(i) for i in bg_candidates),
        fg_candidates=tuple(int(i) for i in fg_candidates),
        bg_added=bg_added,
        fg_added=fg_added,
    )
