"""End-to-end per-sequence propagation: match, filter, fuse, update."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .banks import ObjectBanks, build_banks, update_banks
from .fusion import fuse
from .matching import soft_match
from .morphology import remove_outliers
from .segment import fg_probability, upsample
from .types import (
    Config,
    ContractViolation,
    FeatureMap,
    LabelMask,
    ProbabilityMap,
    binary_mask,
)


@dataclass
class PropagationResult:
    masks: list[LabelMask]  # one per frame; index 0 is the template verbatim
    log: dict

    @property
    def frame_count(self) -> int:
        return len(self.masks)


def _match_object(
    frame: FeatureMap, banks: ObjectBanks, cfg: Config, width: int, height: int
) -> ProbabilityMap:
    fg_map = soft_match(frame, banks.fg, cfg.top_k, cfg.kernel_strategy, cfg.threads)
    fg_grid = upsample(fg_map, width, height, frame.stride)
    if cfg.fg_only_matching:
        bg_grid = np.zeros_like(fg_grid)  # neutral: probability from FG evidence alone
    elif len(banks.bg) == 0:
        bg_grid = np.full_like(fg_grid, -1.0)  # template had no background cells
    else:
        bg_map = soft_match(frame, banks.bg, cfg.top_k, cfg.kernel_strategy, cfg.threads)
        bg_grid = upsample(bg_map, width, height, frame.stride)
    return fg_probability(
        fg_grid, bg_grid, cfg.fg_weight, cfg.bg_weight, cfg.softmax_temperature
    )


def propagate(
    features: Sequence[FeatureMap],
    template: LabelMask,
    cfg: Config,
) -> PropagationResult:
    """Propagate the template mask through a feature sequence.

    Frames are processed in order (banks and the previous mask carry state);
    the returned masks list starts with the template itself. The log's
    "frames" subtree is fully deterministic; wall-clock numbers live under
    "timings" only.
    """
    if len(features) < 2:
        raise ContractViolation(f"need at least 2 frames, got {len(features)}")
    width, height = template.width, template.height
    banks = build_banks(features[0], template)
    previous = {b.object_id: binary_mask(template.binary(b.object_id)) for b in banks}

    masks: list[LabelMask] = [template]
    frame_entries: list[dict] = []
    per_frame_ms: list[float] = []
    t_start = time.perf_counter()

    for t in range(2, len(features) + 1):
        f_start = time.perf_counter()
        frame = features[t - 1]
        fused_inputs: list[ProbabilityMap] = []
        object_entries: list[dict] = []
        for obj in banks:
            p_init = _match_object(frame, obj, cfg, width, height)
            y_init = binary_mask(p_init.values >= cfg.bg_cutoff)
            prev = previous[obj.object_id]
            filter_applied = bool(
                cfg.outlier_removal_enabled and prev.labels.any()
            )
            if cfg.outlier_removal_enabled:
                y_final = remove_outliers(
                    y_init, prev, cfg.extrusion_radius, cfg.componentwise_outlier_removal
                )
            else:
                y_final = y_init
            p_final = ProbabilityMap(p_init.values * y_final.binary(1))
            report = update_banks(frame, y_init, y_final, p_final, obj, cfg, t)
            previous[obj.object_id] = y_final
            fused_inputs.append(p_final)
            object_entries.append(
                {
                    "object": obj.object_id,
                    "fg_bank": len(obj.fg),
                    "bg_bank": len(obj.bg),
                    "outlier_removal_applied": filter_applied,
                    "update": report.to_json(),
                }
            )
        masks.append(fuse(fused_inputs, cfg.bg_cutoff))
        frame_entries.append({"frame": t, "objects": object_entries})
        per_frame_ms.append((time.perf_counter() - f_start) * 1e3)

    log = {
        "version": 1,
        "config": asdict(cfg),
        "object_count": template.object_count,
        "frame_count": len(features),
        "frames": frame_entries,
        "timings": {
            "per_frame_ms": per_frame_ms,
            "total_ms": (time.perf_counter() - t_start) * 1e3,
        },
    }
    return PropagationResult(masks=masks, log=log)
