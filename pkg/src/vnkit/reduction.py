"""Deterministic reductions.

Floating-point addition is not associative, so naive ``np.sum`` results
can differ between BLAS builds or between differently-split parallel
runs.  Every mean reported by this package goes through
:func:`chunked_mean`: a fixed-order, fixed-chunk-size pairwise-free
summation that yields bitwise-identical results for identical input
arrays on any platform with IEEE-754 doubles.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CHUNK", "chunked_sum", "chunked_mean"]

# 1024 keeps intermediate sums small enough that the chunk pass adds
# negligible error while the order stays trivially documentable.
CHUNK = 1024


def chunked_sum(values: np.ndarray) -> float:
    """Sum ``values`` left to right in fixed chunks of :data:`CHUNK`.

    Each chunk is reduced with a strict left fold (``np.add.reduce`` on a
    contiguous float64 copy), then the chunk sums are folded in order.
    The result depends only on the element order, never on array layout
    or thread count.
    """
    flat = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
    if flat.size == 0:
        return 0.0
    partial = [
        float(np.add.reduce(flat[start : start + CHUNK]))
        for start in range(0, flat.size, CHUNK)
    ]
    return float(np.add.reduce(np.asarray(partial, dtype=np.float64)))


def chunked_mean(values: np.ndarray) -> float:
    """Deterministic mean built on :func:`chunked_sum`.

    Raises
    ------
    ValueError
        If ``values`` is empty; callers decide what an empty reduction
        means (usually an :class:`~vnkit.errors.EmptySampleError`).
    """
    flat = np.asarray(values, dtype=np.float64).reshape(-1)
    if flat.size == 0:
        raise ValueError("chunked_mean of an empty array")
    return chunked_sum(flat) / float(flat.size)
