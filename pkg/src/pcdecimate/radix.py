"""Stable LSD radix sort for (key, value) pairs, parallel over chunks."""

import numpy as np
from numba import njit, prange

from .parallel import worker_threads

DIGIT_BITS = 8
_RADIX = 1 << DIGIT_BITS


def radix_passes(key_bits):
    return max(1, -(-key_bits // DIGIT_BITS))


@njit(parallel=True, cache=True)
def _lsd_sort(keys, values, passes, nchunks):
    n = keys.shape[0]
    src_k = keys.copy()
    src_v = values.copy()
    dst_k = np.empty_like(src_k)
    dst_v = np.empty_like(src_v)
    chunk = (n + nchunks - 1) // nchunks
    hist = np.zeros((nchunks, _RADIX), dtype=np.int64)
    for p in range(passes):
        shift = np.uint64(p * DIGIT_BITS)
        mask = np.uint64(_RADIX - 1)
        for c in prange(nchunks):
            for d in range(_RADIX):
                hist[c, d] = 0
            for i in range(c * chunk, min(n, (c + 1) * chunk)):
                hist[c, (src_k[i] >> shift) & mask] += 1
        # exclusive scan, digit-major then chunk-major, keeps the pass stable
        total = 0
        for d in range(_RADIX):
            for c in range(nchunks):
                cnt = hist[c, d]
                hist[c, d] = total
                total += cnt
        for c in prange(nchunks):
            for i in range(c * chunk, min(n, (c + 1) * chunk)):
                d = (src_k[i] >> shift) & mask
                pos = hist[c, d]
                dst_k[pos] = src_k[i]
                dst_v[pos] = src_v[i]
                hist[c, d] = pos + 1
        src_k, dst_k = dst_k, src_k
        src_v, dst_v = dst_v, src_v
    return src_k, src_v


def radix_sort_pairs(keys, values, key_bits=None, threads=None):
    """Sort pairs by key with a stable LSD radix sort.

    Digits are 8 bits wide; ``ceil(key_bits / 8)`` passes are made. Equal keys
    keep their input order. The result does not depend on the thread count.

    Args:
        keys: non-negative integer keys.
        values: payload, same length as ``keys``.
        key_bits: significant key bits; inferred from the largest key if omitted.
        threads: worker count (see :func:`pcdecimate.parallel.resolve_threads`).

    Returns:
        ``(sorted_keys, permuted_values)`` as new ``uint64`` / ``int64`` arrays.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    values = np.ascontiguousarray(values, dtype=np.int64)
    if keys.shape != values.shape or keys.ndim != 1:
        raise ValueError("keys and values must be 1-D arrays of equal length")
    if len(keys) == 0:
        return keys.copy(), values.copy()
    if key_bits is None:
        key_bits = int(keys.max()).bit_length()
    with worker_threads(threads) as n_threads:
        nchunks = max(1, min(4 * n_threads, len(keys) // 4096))
        return _lsd_sort(keys, values, radix_passes(key_bits), nchunks)
