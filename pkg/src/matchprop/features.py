"""Built-in handcrafted features so the pipeline runs without any network.

Per cell: mean RGB (3) + chroma-weighted 8-bin hue histogram (8) +
magnitude-weighted 8-bin gradient-orientation histogram (8) + normalized cell
coordinates (2), each block L2-normalized independently, c = 21.
"""

from __future__ import annotations

import numpy as np

from .types import FeatureMap, FormatError

HUE_BINS = 8
ORIENT_BINS = 8


def _l2_block(block: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(block))
    return block / norm if norm > 1e-12 else block


def _hue_chroma(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # hue in [0, 360); desaturated pixels get chroma 0 and never vote
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    chroma = mx - mn
    hue = np.zeros_like(mx)
    sel = chroma > 1e-12
    rr, gg, bb, cc, mm = r[sel], g[sel], b[sel], chroma[sel], mx[sel]
    h = np.where(
        mm == rr,
        ((gg - bb) / cc) % 6.0,
        np.where(mm == gg, (bb - rr) / cc + 2.0, (rr - gg) / cc + 4.0),
    )
    hue[sel] = h * 60.0
    return hue, chroma


def extract_handcrafted(
    image: np.ndarray,
    stride: int = 8,
    cell: int = 8,
    include_position: bool = True,
) -> FeatureMap:
    """Extract the 21-channel handcrafted feature grid from an RGB image."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise FormatError(f"expected an (H, W, 3) RGB image, got shape {image.shape}")
    height, width = image.shape[:2]
    if height < cell or width < cell:
        raise FormatError(f"image {width}x{height} smaller than one {cell}px cell")
    rgb = image.astype(np.float64) / 255.0
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    gy, gx = np.gradient(gray)
    magnitude = np.hypot(gx, gy)
    orient = np.arctan2(gy, gx) % np.pi  # unsigned orientation, [0, pi)
    orient_bin = np.minimum((orient / np.pi * ORIENT_BINS).astype(np.int64), ORIENT_BINS - 1)
    hue, chroma = _hue_chroma(rgb)
    hue_bin = np.minimum((hue / 360.0 * HUE_BINS).astype(np.int64), HUE_BINS - 1)

    grid_h = -(-height // stride)
    grid_w = -(-width // stride)
    channels = 19 + (2 if include_position else 0)
    out = np.zeros((grid_h, grid_w, channels), dtype=np.float64)
    # pooling windows are centred on stride offsets, matching the upsampling
    # convention (cell r,c is sampled back at pixel r*stride, c*stride)
    lo = cell // 2
    hi = cell - lo
    for row in range(grid_h):
        y0 = max(row * stride - lo, 0)
        y1 = min(row * stride + hi, height)
        for col in range(grid_w):
            x0 = max(col * stride - lo, 0)
            x1 = min(col * stride + hi, width)
            mean_rgb = rgb[y0:y1, x0:x1].mean(axis=(0, 1))
            hue_hist = np.bincount(
                hue_bin[y0:y1, x0:x1].ravel(),
                weights=chroma[y0:y1, x0:x1].ravel(),
                minlength=HUE_BINS,
            )
            grad_hist = np.bincount(
                orient_bin[y0:y1, x0:x1].ravel(),
                weights=magnitude[y0:y1, x0:x1].ravel(),
                minlength=ORIENT_BINS,
            )
            blocks = [_l2_block(mean_rgb), _l2_block(hue_hist), _l2_block(grad_hist)]
            if include_position:
                pos = np.array([(col + 0.5) / grid_w, (row + 0.5) / grid_h])
                blocks.append(_l2_block(pos))
            out[row, col] = np.concatenate(blocks)
    return FeatureMap(out.astype(np.float32), stride=stride)
