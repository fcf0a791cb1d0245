"""Numba kernels for the matching layer.

Both strategies parallelize over query rows only; per-row work is a fixed
sequential order, so outputs are bit-identical for any thread count. Both
special-case top-1 (plain max) and top-n (sequential float64 mean in bank
order) so those reductions are exact, not merely close.
"""

import numpy as np
from numba import njit, prange

ROW_BLOCK = 64
BANK_BLOCK = 256


@njit(cache=True, fastmath=True, inline="always")
def _heap_push(heap, v):
    # min-heap of the current top-K; strict > keeps the earlier (lower-index)
    # entry on ties at the K-th value
    if v > heap[0]:
        heap[0] = v
        pos = 0
        k = heap.shape[0]
        while True:
            left = 2 * pos + 1
            right = left + 1
            small = pos
            if left < k and heap[left] < heap[small]:
                small = left
            if right < k and heap[right] < heap[small]:
                small = right
            if small == pos:
                break
            heap[pos], heap[small] = heap[small], heap[pos]
            pos = small


@njit(cache=True, fastmath=True, inline="always")
def _fill_scores_block(q, b, scratch, i0, i1, n):
    # register-block four bank rows per query row; clip to cosine range
    c = q.shape[1]
    for j0 in range(0, n, BANK_BLOCK):
        j1 = min(j0 + BANK_BLOCK, n)
        for i in range(i0, i1):
            j = j0
            while j + 4 <= j1:
                a0 = np.float32(0.0)
                a1 = np.float32(0.0)
                a2 = np.float32(0.0)
                a3 = np.float32(0.0)
                for k in range(c):
                    qv = q[i, k]
                    a0 += qv * b[j, k]
                    a1 += qv * b[j + 1, k]
                    a2 += qv * b[j + 2, k]
                    a3 += qv * b[j + 3, k]
                scratch[i - i0, j] = min(max(a0, np.float32(-1.0)), np.float32(1.0))
                scratch[i - i0, j + 1] = min(max(a1, np.float32(-1.0)), np.float32(1.0))
                scratch[i - i0, j + 2] = min(max(a2, np.float32(-1.0)), np.float32(1.0))
                scratch[i - i0, j + 3] = min(max(a3, np.float32(-1.0)), np.float32(1.0))
                j += 4
            while j < j1:
                acc = np.float32(0.0)
                for k in range(c):
                    acc += q[i, k] * b[j, k]
                scratch[i - i0, j] = min(max(acc, np.float32(-1.0)), np.float32(1.0))
                j += 1


@njit(cache=True, fastmath=True, inline="always")
def _reduce_row(row, n, top_k):
    if top_k == 1:
        best = row[0]
        for j in range(1, n):
            if row[j] > best:
                best = row[j]
        return best
    if top_k >= n:
        acc = 0.0
        for j in range(n):
            acc += np.float64(row[j])
        return np.float32(acc / n)
    heap = np.full(top_k, np.float32(-2.0), dtype=np.float32)
    for j in range(n):
        _heap_push(heap, row[j])
    acc = 0.0
    for t in range(top_k):
        acc += np.float64(heap[t])
    return np.float32(acc / top_k)


@njit(cache=True, parallel=True, fastmath=True)
def blocked_topk_mean(q, b, top_k, out):
    """Blocked inner products + bounded-heap selection, parallel over row blocks."""
    m = q.shape[0]
    n = b.shape[0]
    nblocks = (m + ROW_BLOCK - 1) // ROW_BLOCK
    for blk in prange(nblocks):
        i0 = blk * ROW_BLOCK
        i1 = min(i0 + ROW_BLOCK, m)
        scratch = np.empty((i1 - i0, n), dtype=np.float32)
        _fill_scores_block(q, b, scratch, i0, i1, n)
        for i in range(i0, i1):
            out[i] = _reduce_row(scratch[i - i0], n, top_k)


@njit(cache=True, parallel=True, fastmath=True)
def fill_similarity(q, b, out):
    """Full (m, n) cosine matrix, unblocked row-major traversal."""
    m = q.shape[0]
    n = b.shape[0]
    c = q.shape[1]
    for i in prange(m):
        for j in range(n):
            acc = np.float32(0.0)
            for k in range(c):
                acc += q[i, k] * b[j, k]
            out[i, j] = min(max(acc, np.float32(-1.0)), np.float32(1.0))


@njit(cache=True, parallel=True, fastmath=True)
def naive_topk_mean(q, b, top_k, out):
    """Full materialization + per-row full sort (the straightforward strategy)."""
    m = q.shape[0]
    n = b.shape[0]
    scores = np.empty((m, n), dtype=np.float32)
    fill_similarity(q, b, scores)
    for i in prange(m):
        if top_k == 1 or top_k >= n:
            out[i] = _reduce_row(scores[i], n, top_k)
        else:
            row = scores[i].copy()
            row.sort()
            acc = 0.0
            for t in range(top_k):
                acc += np.float64(row[n - 1 - t])
            out[i] = np.float32(acc / top_k)
