"""Mask propagation by top-K feature matching against FG/BG appearance banks."""

import os as _os
import warnings as _warnings

# Allow up to 8 matching threads even on smaller machines; must happen before
# numba is first imported anywhere in the process.
_os.environ.setdefault("NUMBA_NUM_THREADS", str(max(_os.cpu_count() or 1, 8)))
_warnings.filterwarnings("ignore", message=".*TBB.*")

from .types import (  # noqa: E402
    Config,
    ContractViolation,
    DegenerateTemplateError,
    EmptyPredictionError,
    FeatureBank,
    FeatureMap,
    FormatError,
    LabelMask,
    MatchPropError,
    ProbabilityMap,
    binary_mask,
    downsample_labels,
    downsample_mask,
)

__all__ = [
    "Config",
    "ContractViolation",
    "DegenerateTemplateError",
    "EmptyPredictionError",
    "FeatureBank",
    "FeatureMap",
    "FormatError",
    "LabelMask",
    "MatchPropError",
    "ProbabilityMap",
    "binary_mask",
    "downsample_labels",
    "downsample_mask",
]

__version__ = "0.1.0"
