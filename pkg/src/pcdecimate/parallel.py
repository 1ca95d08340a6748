"""Worker-thread control for the numba kernels."""

import os
import threading
from contextlib import contextmanager

import numba

from .errors import ConfigError

THREADS_ENV = "PCDECIMATE_THREADS"

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe: old system TBB builds only produce a warning
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

# numba's default workqueue layer is not reentrant; kernels from concurrent
# decimate() calls are serialized through this lock.
_kernel_lock = threading.RLock()


def max_threads():
    return numba.config.NUMBA_NUM_THREADS


def default_threads():
    """Worker count from ``$PCDECIMATE_THREADS``, capped at what numba was started with."""
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return max_threads()
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1")
    return min(n, max_threads())


def resolve_threads(threads):
    if threads is None:
        return default_threads()
    if threads == "max":
        return max_threads()
    threads = int(threads)
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}")
    if threads > max_threads():
        raise ConfigError(
            f"{threads} threads requested but numba was started with {max_threads()}; "
            "raise NUMBA_NUM_THREADS"
        )
    return threads


@contextmanager
def worker_threads(threads=None):
    n = resolve_threads(threads)
    with _kernel_lock:
        previous = numba.get_num_threads()
        numba.set_num_threads(n)
        try:
            yield n
        finally:
            numba.set_num_threads(previous)
