"""Soft matching: cosine similarity against a bank, reduced to top-K means."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass

import numba
import numpy as np

from . import _kernels
from .types import ContractViolation, FeatureBank, FeatureMap

NORM_FLOOR = 1e-12  # below this a vector counts as zero and matches nothing


@dataclass(frozen=True)
class ScoreMap:
    """(h, w) matching scores, one per feature-grid cell, in [-1, 1]."""

    scores: np.ndarray

    def __post_init__(self):
        scores = np.ascontiguousarray(self.scores)
        if scores.ndim != 2:
            raise ContractViolation(f"score map must be 2-D, got shape {scores.shape}")
        if scores.size and (not np.isfinite(scores).all()):
            raise ContractViolation("scores must be finite")
        if scores.size and (scores.min() < -1.0 or scores.max() > 1.0):
            raise ContractViolation("scores must lie in the cosine range [-1, 1]")
        object.__setattr__(self, "scores", scores)

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @property
    def width(self) -> int:
        return self.scores.shape[1]


def cosine(u, v) -> float:
    """Cosine similarity of two vectors; 0.0 when either norm is ~zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ContractViolation(f"cosine needs two equal-length vectors, got {u.shape} / {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < NORM_FLOOR or nv < NORM_FLOOR:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def normalize_rows(x: np.ndarray) -> np.ndarray:
    """Unit-normalize rows in float64, returning float32; ~zero rows become zero."""
    x = np.ascontiguousarray(x, dtype=np.float32)
    norms = np.linalg.norm(x.astype(np.float64), axis=1)
    out = np.zeros_like(x)
    safe = norms > NORM_FLOOR
    if safe.any():
        out[safe] = (x[safe].astype(np.float64) / norms[safe, None]).astype(np.float32)
    return out


@contextmanager
def thread_count(n: int):
    """Temporarily set the numba worker count (clamped to the configured maximum)."""
    limit = numba.config.NUMBA_NUM_THREADS
    old = numba.get_num_threads()
    numba.set_num_threads(max(1, min(n, limit)))
    try:
        yield
    finally:
        numba.set_num_threads(old)


def _validate(frame: FeatureMap, bank: FeatureBank, top_k: int) -> None:
    if len(bank) == 0:
        raise ContractViolation("cannot match against an empty bank")
    if bank.channels != frame.channels:
        raise ContractViolation(
            f"bank has {bank.channels} channels, frame has {frame.channels}"
        )
    if top_k < 1:
        raise ContractViolation(f"top_k must be >= 1, got {top_k}")


def similarity_matrix(frame: FeatureMap, bank: FeatureBank, threads: int = 1) -> np.ndarray:
    """Full (h*w, |bank|) cosine matrix, rows in grid order, entries in [-1, 1]."""
    _validate(frame, bank, 1)
    q = normalize_rows(frame.flat())
    b = normalize_rows(bank.matrix)
    out = np.empty((q.shape[0], b.shape[0]), dtype=np.float32)
    with thread_count(threads):
        _kernels.fill_similarity(q, b, out)
    return out


def soft_match(
    frame: FeatureMap,
    bank: FeatureBank,
    top_k: int,
    strategy: str = "blocked",
    threads: int = 1,
) -> ScoreMap:
    """Per-cell mean of the top-K cosine similarities against the bank.

    The effective K saturates at the bank size. Output is bit-deterministic
    for a given strategy, independent of the thread count.
    """
    _validate(frame, bank, top_k)
    q = normalize_rows(frame.flat())
    b = normalize_rows(bank.matrix)
    k = min(top_k, b.shape[0])
    out = np.empty(q.shape[0], dtype=np.float32)
    if strategy == "blocked":
        kernel = _kernels.blocked_topk_mean
    elif strategy == "naive":
        kernel = _kernels.naive_topk_mean
    else:
        raise ContractViolation(f"unknown kernel strategy {strategy!r}")
    with thread_count(threads):
        kernel(q, b, k, out)
    return ScoreMap(out.reshape(frame.height, frame.width))


def soft_match_oracle(frame: FeatureMap, bank: FeatureBank, top_k: int) -> ScoreMap:
    """Reference implementation: float64 full materialization + full sort per row."""
    _validate(frame, bank, top_k)
    q = frame.flat().astype(np.float64)
    b = bank.matrix.astype(np.float64)
    qn = np.linalg.norm(q, axis=1)
    bn = np.linalg.norm(b, axis=1)
    q = np.where(qn[:, None] > NORM_FLOOR, q / np.maximum(qn, NORM_FLOOR)[:, None], 0.0)
    b = np.where(bn[:, None] > NORM_FLOOR, b / np.maximum(bn, NORM_FLOOR)[:, None], 0.0)
    a = np.clip(q @ b.T, -1.0, 1.0)
    k = min(top_k, b.shape[0])
    ordered = np.sort(a, axis=1)[:, ::-1]
    scores = ordered[:, :k].mean(axis=1)
    return ScoreMap(scores.astype(np.float32).reshape(frame.height, frame.width))


@dataclass(frozen=True)
class BenchResult:
    strategy: str
    grid_h: int
    grid_w: int
    channels: int
    bank_size: int
    top_k: int
    threads: int
    millis: float

    @property
    def gflops(self) -> float:
        flops = 2.0 * self.grid_h * self.grid_w * self.channels * self.bank_size
        return flops / (self.millis * 1e-3) / 1e9

    def csv_row(self) -> str:
        return (
            f"{self.strategy},{self.grid_h},{self.grid_w},{self.channels},"
            f"{self.bank_size},{self.top_k},{self.threads},{self.millis:.3f}"
        )


CSV_HEADER = "strategy,h,w,c,bank,K,threads,millis"


def benchmark(
    grid_h: int,
    grid_w: int,
    channels: int,
    bank_size: int,
    top_k: int,
    strategy: str = "blocked",
    threads: int = 1,
    repeats: int = 3,
    seed: int = 0,
) -> BenchResult:
    """Time soft_match on synthetic data; reports the best of `repeats` runs."""
    rng = np.random.default_rng(seed)
    frame = FeatureMap(
        rng.standard_normal((grid_h, grid_w, channels)).astype(np.float32), stride=8
    )
    bank = FeatureBank(channels)
    bank.append(
        rng.standard_normal((bank_size, channels)).astype(np.float32),
        origin="template",
        frame=1,
        cells=range(bank_size),
    )
    soft_match(frame, bank, top_k, strategy=strategy, threads=threads)  # JIT warm-up
    best = float("inf")
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        soft_match(frame, bank, top_k, strategy=strategy, threads=threads)
        best = min(best, time.perf_counter() - t0)
    return BenchResult(strategy, grid_h, grid_w, channels, bank_size, top_k, threads, best * 1e3)
