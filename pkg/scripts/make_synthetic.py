#!/usr/bin/env python3
"""Write the synthetic benchmark sequences to disk as frame/mask image dirs.

Usage: python scripts/make_synthetic.py OUTPUT_DIR [--frames N]

Each sequence gets OUTPUT_DIR/<name>/frames/%05d.png and .../gt/%05d.png,
ready for the `matchprop propagate` / `matchprop eval` CLI.
"""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image

from matchprop.synthetic import moving_square, occlusion_sequence, two_object_sequence


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", type=Path)
    parser.add_argument("--frames", type=int, default=20)
    args = parser.parse_args()

    for seq in (
        moving_square(args.frames),
        occlusion_sequence(args.frames),
        two_object_sequence(args.frames),
    ):
        frames_dir = args.output / seq.name / "frames"
        gt_dir = args.output / seq.name / "gt"
        frames_dir.mkdir(parents=True, exist_ok=True)
        gt_dir.mkdir(parents=True, exist_ok=True)
        for i, (frame, mask) in enumerate(zip(seq.frames, seq.masks), start=1):
            Image.fromarray(frame).save(frames_dir / f"{i:05d}.png")
            Image.fromarray(mask.labels.astype(np.uint8)).save(gt_dir / f"{i:05d}.png")
        print(f"{seq.name}: {seq.frame_count} frames -> {args.output / seq.name}")


if __name__ == "__main__":
    main()
