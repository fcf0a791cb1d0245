"""File interchange: VMF1 feature tensors, mask/frame images, overlays.

VMF1 layout (little-endian): magic "VMF" + version byte "1", four u32 fields
h, w, c, s, then h*w*c float32 values in (row, col, channel) order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .types import FeatureMap, FormatError, LabelMask, ProbabilityMap

MAGIC = b"VMF"
VERSION = b"1"
_HEADER = struct.Struct("<4I")  # h, w, c, s


def write_feature_file(fmap: FeatureMap, path) -> None:
    payload = np.ascontiguousarray(fmap.data, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(MAGIC + VERSION)
        fh.write(_HEADER.pack(fmap.height, fmap.width, fmap.channels, fmap.stride))
        fh.write(payload.tobytes())


def read_feature_file(path) -> FeatureMap:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 4:
        raise FormatError(f"{path}: truncated header at offset {len(blob)} (need 4 magic bytes)")
    if blob[:3] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:3]!r} at offset 0")
    if blob[3:4] != VERSION:
        raise FormatError(f"{path}: unsupported format version {blob[3:4]!r} at offset 3")
    if len(blob) < 4 + _HEADER.size:
        raise FormatError(f"{path}: truncated header at offset {len(blob)}")
    h, w, c, s = _HEADER.unpack_from(blob, 4)
    if min(h, w, c, s) < 1:
        raise FormatError(f"{path}: non-positive dimension in header (h={h} w={w} c={c} s={s})")
    start = 4 + _HEADER.size
    need = h * w * c * 4
    if len(blob) - start < need:
        raise FormatError(
            f"{path}: payload truncated at offset {len(blob)} (declared {need} bytes from {start})"
        )
    if len(blob) - start > need:
        raise FormatError(f"{path}: {len(blob) - start - need} trailing bytes after offset {start + need}")
    values = np.frombuffer(blob, dtype="<f4", count=h * w * c, offset=start)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise FormatError(f"{path}: non-finite scalar at offset {start + int(bad[0]) * 4}")
    return FeatureMap(values.reshape(h, w, c).copy(), stride=s)


def load_frame(path) -> np.ndarray:
    """Read an RGB frame as an (H, W, 3) uint8 array."""
    with Image.open(path) as im:
        im = im.convert("RGB")
        return np.asarray(im, dtype=np.uint8)


def load_mask(path) -> LabelMask:
    """Read an 8-bit single-channel image; pixel value = label index."""
    with Image.open(path) as im:
        if im.mode not in ("L", "P", "1"):
            raise FormatError(f"{path}: masks must be 8-bit single-channel, got mode {im.mode}")
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return LabelMask(arr.astype(np.int64))


def save_mask(mask: LabelMask, path) -> None:
    if mask.object_count > 255:
        raise FormatError("8-bit mask files hold at most 255 objects")
    Image.fromarray(mask.labels.astype(np.uint8), mode="L").save(path)


def load_probability(path) -> ProbabilityMap:
    """Read a 16-bit single-channel image; value = round(p * 65535)."""
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.dtype not in (np.dtype(np.uint16), np.dtype(np.int32)):
        raise FormatError(f"{path}: probability maps must be 16-bit single-channel, got {arr.dtype}")
    return ProbabilityMap(arr.astype(np.float64) / 65535.0)


def save_probability(pmap: ProbabilityMap, path) -> None:
    q = np.round(pmap.values.astype(np.float64) * 65535.0).astype(np.uint16)
    Image.fromarray(q).save(path)


# qualitative-overlay palette, one colour per object index (1-based), cycled
PALETTE = np.array(
    [
        (230, 60, 60),
        (60, 120, 230),
        (60, 200, 90),
        (230, 200, 40),
        (180, 70, 200),
        (60, 210, 210),
    ],
    dtype=np.float32,
)


def save_overlay(frame: np.ndarray, mask: LabelMask, path, alpha: float = 0.5) -> None:
    """Alpha-blend per-object colours onto the frame for inspection."""
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise FormatError(f"overlay needs an (H, W, 3) frame, got shape {frame.shape}")
    if frame.shape[:2] != mask.labels.shape:
        raise FormatError("frame and mask dimensions differ")
    out = frame.astype(np.float32)
    for k in range(1, mask.object_count + 1):
        sel = mask.labels == k
        if not sel.any():
            continue
        colour = PALETTE[(k - 1) % len(PALETTE)]
        out[sel] = (1.0 - alpha) * out[sel] + alpha * colour
    Image.fromarray(np.clip(np.round(out), 0, 255).astype(np.uint8)).save(path)
