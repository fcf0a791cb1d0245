#!/usr/bin/env python3
"""Ablation grid on the synthetic suite: filter and online updates on/off.

Prints per-sequence and mean IoU for the four cumulative configurations plus
the FG-only matching row. Mirrors the structure of the full-scale ablation
(filter, then BG update, then FG update, each added on top).
"""

import argparse
import time

import numpy as np

from matchprop.features import extract_handcrafted
from matchprop.metrics import jaccard
from matchprop.pipeline import propagate
from matchprop.synthetic import (
    moving_square,
    occlusion_sequence,
    suite_config,
    two_object_sequence,
)

ROWS = [
    ("bare matching", dict(outlier_removal_enabled=False, bg_update_enabled=False,
                           fg_update_enabled=False)),
    ("+ outlier removal", dict(bg_update_enabled=False, fg_update_enabled=False)),
    ("+ BG update", dict(fg_update_enabled=False)),
    ("+ FG update (full)", dict()),
    ("FG-only matching", dict(fg_only_matching=True)),
]


def mean_iou(result, seq):
    return float(np.mean([jaccard(p, g) for p, g in zip(result.masks[1:], seq.masks[1:])]))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=20)
    parser.add_argument("--two-object", action="store_true", help="include the 2-object variant")
    args = parser.parse_args()

    sequences = [moving_square(args.frames), occlusion_sequence(args.frames)]
    if args.two_object:
        sequences.append(two_object_sequence(args.frames))
    features = {s.name: [extract_handcrafted(f) for f in s.frames] for s in sequences}

    names = [s.name for s in sequences]
    print(f"{'configuration':<22}" + "".join(f"{n:>15}" for n in names) + f"{'mean':>10}")
    for label, overrides in ROWS:
        t0 = time.perf_counter()
        scores = []
        for seq in sequences:
            result = propagate(features[seq.name], seq.masks[0], suite_config(**overrides))
            scores.append(mean_iou(result, seq))
        row = "".join(f"{s:>15.4f}" for s in scores)
        print(f"{label:<22}{row}{np.mean(scores):>10.4f}   ({time.perf_counter()-t0:.1f}s)")


if __name__ == "__main__":
    main()
