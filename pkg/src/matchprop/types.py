"""Shared data model: feature grids, label masks, probability maps, feature banks.

Axis convention is row-major everywhere: masks and probability maps are
(H, W) arrays indexed [row, col]; feature grids are (h, w, c) arrays.
Grid cells are addressed by flat row-major index ``row * w + col``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np


class MatchPropError(Exception):
    """Base class for errors raised by this package."""


class FormatError(MatchPropError):
    """Malformed file or dimensionally incompatible inputs."""


class ContractViolation(MatchPropError):
    """An operation was called outside its contract (empty bank, shape mismatch, ...)."""


class DegenerateTemplateError(MatchPropError):
    """An annotated object vanished when its mask was downsampled to the feature grid."""

    def __init__(self, object_id: int):
        super().__init__(
            f"object {object_id} has no foreground cells on the feature grid; "
            f"use higher-resolution features or a larger template"
        )
        self.object_id = object_id


class EmptyPredictionError(MatchPropError):
    """A metric with the predicted-foreground count in its denominator saw an empty prediction."""


@dataclass(frozen=True)
class FeatureMap:
    """Dense per-cell feature grid for one frame.

    data has shape (h, w, c), float32; stride is the number of full-resolution
    pixels per grid cell along each axis.
    """

    data: np.ndarray
    stride: int

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 3:
            raise ContractViolation(f"feature data must be (h, w, c), got shape {data.shape}")
        if min(data.shape) < 1:
            raise ContractViolation(f"feature grid dims must be positive, got {data.shape}")
        if self.stride < 1:
            raise ContractViolation(f"stride must be >= 1, got {self.stride}")
        if not np.isfinite(data).all():
            raise ContractViolation("feature data contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def flat(self) -> np.ndarray:
        """(h*w, c) row-major view of the grid."""
        return self.data.reshape(-1, self.data.shape[2])


@dataclass(frozen=True)
class LabelMask:
    """(H, W) integer mask; 0 is background, k in 1..object_count is object k."""

    labels: np.ndarray
    object_count: int = -1  # -1: infer from labels

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels)
        if labels.ndim != 2:
            raise ContractViolation(f"mask must be 2-D (H, W), got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ContractViolation(f"mask labels must be integers, got {labels.dtype}")
        if labels.size and labels.min() < 0:
            raise ContractViolation("mask labels must be non-negative")
        n = self.object_count
        if n == -1:
            n = int(labels.max()) if labels.size else 0
        if labels.size and int(labels.max()) > n:
            raise ContractViolation(f"mask contains label {int(labels.max())} > object_count {n}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "object_count", n)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def binary(self, k: int = 1) -> np.ndarray:
        """(H, W) bool array of pixels labelled k."""
        return self.labels == k

    def is_binary(self) -> bool:
        return self.object_count <= 1


def binary_mask(fg: np.ndarray) -> LabelMask:
    """Wrap a boolean foreground array as a single-object LabelMask."""
    return LabelMask(fg.astype(np.uint8), object_count=1)


@dataclass(frozen=True)
class ProbabilityMap:
    """(H, W) per-pixel foreground probability in [0, 1] for one object."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise ContractViolation(f"probability map must be 2-D, got shape {values.shape}")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ContractViolation("probabilities must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


ORIGIN_TEMPLATE = "template"
ORIGIN_ONLINE = "online-update"


class FeatureBank:
    """Growable, append-only set of c-dimensional feature vectors with provenance.

    Entries are stored in insertion order. Each entry records its origin tag
    (template | online-update), source frame index, and the flat grid cell it
    was taken from. Under the default (unbounded) configuration entries are
    never removed; with a capacity set, the oldest online-update entries are
    evicted first and template entries always survive.
    """

    def __init__(self, channels: int):
        if channels < 1:
            raise ContractViolation(f"channels must be positive, got {channels}")
        self.channels = channels
        self._rows = np.empty((0, channels), dtype=np.float32)
        self._size = 0
        self.origins: list[tuple[str, int, int]] = []  # (tag, frame, cell)

    def __len__(self) -> int:
        return self._size

    @property
    def matrix(self) -> np.ndarray:
        """(n, c) float32 view of all entries, insertion order."""
        return self._rows[: self._size]

    def append(self, features: np.ndarray, origin: str, frame: int, cells) -> None:
        """Append rows (m, c) taken from grid cells of the given frame."""
        features = np.atleast_2d(np.asarray(features, dtype=np.float32))
        if features.shape[1] != self.channels:
            raise ContractViolation(
                f"bank holds {self.channels}-channel features, got {features.shape[1]}"
            )
        if not np.isfinite(features).all():
            raise ContractViolation("bank entries must be finite")
        cells = list(cells)
        if len(cells) != features.shape[0]:
            raise ContractViolation("one grid cell per appended feature row required")
        m = features.shape[0]
        if self._size + m > self._rows.shape[0]:
            grown = max(2 * self._rows.shape[0], self._size + m, 64)
            rows = np.empty((grown, self.channels), dtype=np.float32)
            rows[: self._size] = self._rows[: self._size]
            self._rows = rows
        self._rows[self._size : self._size + m] = features
        self._size += m
        self.origins.extend((origin, frame, int(cell)) for cell in cells)

    def evict_to_capacity(self, capacity: int) -> int:
        """Drop oldest online-update entries until len() <= capacity.

        Template entries are never evicted; returns the number of evictions.
        """
        excess = self._size - capacity
        if excess <= 0:
            return 0
        online = [i for i, (tag, _, _) in enumerate(self.origins) if tag == ORIGIN_ONLINE]
        drop = set(online[:excess])
        if not drop:
            return 0
        keep = [i for i in range(self._size) if i not in drop]
        self._rows = self._rows[keep].copy()
        self._size = len(keep)
        self.origins = [self.origins[i] for i in keep]
        return len(drop)


@dataclass
class Config:
    """All pipeline tunables.

    Defaults follow the reference operating point: top-20 matching, 100 px
    outlier-removal reach, 0.95 foreground-update confidence, 0.4 background
    cutoff for fusion.
    """

    top_k: int = 20
    extrusion_radius: float = 100.0     # d_c, full-resolution pixels
    fg_update_confidence: float = 0.95  # c1
    bg_cutoff: float = 0.4              # c2
    erosion_radius: float = 5.0         # full-resolution pixels
    fg_weight: float = 1.0
    bg_weight: float = 1.0
    softmax_temperature: float = 1.0
    stride: int = 8
    outlier_removal_enabled: bool = True
    bg_update_enabled: bool = True
    fg_update_enabled: bool = True
    fg_only_matching: bool = False
    componentwise_outlier_removal: bool = False
    bank_capacity: Optional[int] = None
    kernel_strategy: str = "blocked"  # "blocked" | "naive"
    threads: int = 1
    include_position_channels: bool = True

    def __post_init__(self):
        if self.top_k < 1:
            raise ContractViolation(f"top_k must be >= 1, got {self.top_k}")
        if not (0.0 < self.fg_update_confidence < 1.0):
            raise ContractViolation("fg_update_confidence must lie in (0, 1)")
        if not (0.0 < self.bg_cutoff < 1.0):
            raise ContractViolation("bg_cutoff must lie in (0, 1)")
        if self.extrusion_radius < 0:
            raise ContractViolation("extrusion_radius must be >= 0")
        if self.erosion_radius < 0:
            raise ContractViolation("erosion_radius must be >= 0")
        if self.fg_weight <= 0 or self.bg_weight <= 0:
            raise ContractViolation("softmax weights must be positive")
        if self.softmax_temperature <= 0:
            raise ContractViolation("softmax_temperature must be positive")
        if self.kernel_strategy not in ("blocked", "naive"):
            raise ContractViolation(f"unknown kernel strategy {self.kernel_strategy!r}")
        if self.bank_capacity is not None and self.bank_capacity < 1:
            raise ContractViolation("bank_capacity must be positive when set")
        if self.threads < 1:
            raise ContractViolation("threads must be >= 1")
        if self.stride < 1:
            raise ContractViolation("stride must be >= 1")

    def with_overrides(self, **kwargs) -> "Config":
        return replace(self, **kwargs)


def _check_grid_compatible(mask_h: int, mask_w: int, grid_h: int, grid_w: int, stride: int) -> None:
    if abs(mask_w - grid_w * stride) >= stride or abs(mask_h - grid_h * stride) >= stride:
        raise FormatError(
            f"mask {mask_w}x{mask_h} incompatible with {grid_w}x{grid_h} grid at stride {stride}"
        )


def downsample_labels(mask: LabelMask, grid_h: int, grid_w: int, stride: int) -> np.ndarray:
    """Project a full-resolution label mask onto the feature grid.

    Each cell takes the label held by the plurality of its covered pixels.
    Ties involving an object are broken toward the object (smallest index
    when several objects tie), never toward background. The last row/column
    of cells may cover a partial window; only covered pixels vote.

    Returns an (grid_h, grid_w) int array of labels.
    """
    h_px, w_px = mask.labels.shape
    _check_grid_compatible(h_px, w_px, grid_h, grid_w, stride)
    n = mask.object_count
    # pad to full cell coverage with a sentinel that never votes
    sentinel = n + 1
    padded = np.full((grid_h * stride, grid_w * stride), sentinel, dtype=np.int64)
    crop_h = min(h_px, grid_h * stride)
    crop_w = min(w_px, grid_w * stride)
    padded[:crop_h, :crop_w] = mask.labels[:crop_h, :crop_w]
    cells = padded.reshape(grid_h, stride, grid_w, stride)
    counts = np.empty((n + 1, grid_h, grid_w), dtype=np.int64)
    for k in range(n + 1):
        counts[k] = (cells == k).sum(axis=(1, 3))
    best = counts.max(axis=0)
    winner = np.zeros((grid_h, grid_w), dtype=np.int64)
    for k in range(n, 0, -1):  # descending so the smallest tying object wins
        winner[counts[k] == best] = k
    return winner


def downsample_mask(mask: LabelMask, grid_h: int, grid_w: int, stride: int, k: int) -> set[int]:
    """Set of flat grid-cell indices assigned to object k (0 = background)."""
    winner = downsample_labels(mask, grid_h, grid_w, stride)
    return set(np.flatnonzero(winner.ravel() == k).tolist())
