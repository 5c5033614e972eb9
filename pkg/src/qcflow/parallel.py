"""Thread-count plumbing for data-parallel kernels."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_threads: int | None = None

# Fixed so results never depend on the thread count.
CHUNK = 1 << 16


def set_threads(k: int | None) -> None:
    global _threads
    if k is not None and k < 1:
        raise ValueError("thread count must be >= 1")
    _threads = k


def threads() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get("QCFLOW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def map_chunks(fn, X: np.ndarray, chunk: int = CHUNK) -> np.ndarray:
    """Apply ``fn(block, offset)`` to row blocks of X and concatenate the results."""
    N = X.shape[0]
    if N <= chunk:
        return fn(X, 0)
    starts = list(range(0, N, chunk))
    k = threads()
    if k == 1:
        parts = [fn(X[i:i + chunk], i) for i in starts]
    else:
        with ThreadPoolExecutor(max_workers=k) as pool:
            parts = list(pool.map(lambda i: fn(X[i:i + chunk], i), starts))
    return np.concatenate(parts, axis=0)
