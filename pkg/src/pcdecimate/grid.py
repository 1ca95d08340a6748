"""Unit-cube normalization, bucket keys over the 2^n grid and the sorted subdivision table.

Keys are row-major: ``key = ix * 4**n + iy * 2**n + iz``. Cell indices come from
``floor((c + 1) / 2 * 2**n)`` with the ``c == 1`` face clamped into the last cell.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .cloud import Aabb, as_cloud, as_point, compute_aabb
from .errors import ConfigError, CoordinateRangeError, PointOutsideBoxError
from .parallel import worker_threads
from .radix import radix_sort_pairs

logger = logging.getLogger(__name__)

USUAL_N_RANGE = (4, 9)
HARD_N_RANGE = (1, 10)


@dataclass(frozen=True)
class GridParams:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n:
            raise ConfigError(f"grid exponent must be an integer, got {self.n}")
        lo, hi = HARD_N_RANGE
        if not lo <= self.n <= hi:
            raise ConfigError(f"grid exponent n={self.n} outside [{lo}, {hi}]")
        if not USUAL_N_RANGE[0] <= self.n <= USUAL_N_RANGE[1]:
            warnings.warn(
                f"grid exponent n={self.n} is outside the usual range {USUAL_N_RANGE}",
                stacklevel=3,
            )

    @property
    def cells_per_axis(self):
        return 1 << self.n

    @property
    def bucket_count(self):
        return 1 << (3 * self.n)

    @property
    def cell_edge(self):
        """Cell edge length in normalized units."""
        return 2.0 / self.cells_per_axis

    @property
    def key_bits(self):
        return 3 * self.n


@dataclass(frozen=True)
class NormalizationRecord:
    """Per-axis affine map between metric space and [-1, 1]^3."""

    center: np.ndarray
    half_extent: np.ndarray

    @classmethod
    def from_box(cls, box):
        lo = box.min
        hi = box.max
        return cls((lo + hi) / 2.0, (hi - lo) / 2.0)

    @property
    def collapsed(self):
        return self.half_extent == 0.0

    def denormalize(self, cloud_norm):
        cloud_norm = np.asarray(cloud_norm, dtype=np.float64)
        return (self.center + cloud_norm * self.half_extent).astype(np.float32)

    def normalized_radii(self, radius):
        """Metric radius as per-axis normalized radii; ``inf`` on collapsed axes."""
        with np.errstate(divide="ignore"):
            return np.where(self.collapsed, np.inf, radius / self.half_extent)


@njit(parallel=True, cache=True)
def _normalize_kernel(pts, center, half):
    out = np.empty(pts.shape, dtype=np.float32)
    for i in prange(pts.shape[0]):
        for a in range(3):
            if half[a] == 0.0:
                out[i, a] = 0.0
            else:
                v = (np.float64(pts[i, a]) - center[a]) / half[a]
                out[i, a] = min(max(v, -1.0), 1.0)
    return out


def normalize(cloud, box=None, threads=None):
    """Map ``cloud`` into the unit cube [-1, 1]^3, axis by axis.

    Args:
        cloud: point cloud.
        box: bounds to normalize against; defaults to the cloud's own AABB.
        threads: worker count.

    Returns:
        ``(normalized float32 cloud, NormalizationRecord)``.

    Raises:
        PointOutsideBoxError: some point is not inside ``box``.
    """
    cloud = as_cloud(cloud)
    if box is None:
        box = compute_aabb(cloud)
    else:
        if not isinstance(box, Aabb):
            box = Aabb(*box)
        if len(cloud) and not box.contains(cloud):
            outside = ~((cloud >= box.min) & (cloud <= box.max)).all(axis=1)
            raise PointOutsideBoxError(f"point {int(np.flatnonzero(outside)[0])} lies outside the box")
    rec = NormalizationRecord.from_box(box)
    with worker_threads(threads):
        out = _normalize_kernel(cloud, rec.center, rec.half_extent)
    return out, rec


def classify_by_halving(c, n):
    """Cell index along one axis by ``n`` successive interval halvings."""
    lo, hi = -1.0, 1.0
    idx = 0
    for _ in range(n):
        mid = (lo + hi) / 2.0
        if c >= mid:
            idx = 2 * idx + 1
            lo = mid
        else:
            idx = 2 * idx
            hi = mid
    return idx


def cell_index(c, n):
    cells = 1 << n
    return min(max(int(np.floor((float(c) + 1.0) * (cells / 2))), 0), cells - 1)


def compose_key(ix, iy, iz, n):
    return (ix << (2 * n)) | (iy << n) | iz


def decompose_key(key, n):
    mask = (1 << n) - 1
    key = int(key)
    return key >> (2 * n), (key >> n) & mask, key & mask


def bucket_key(p_norm, grid):
    """Bucket key of one normalized point."""
    p = as_point(p_norm)
    if (np.abs(p) > 1.0).any():
        raise CoordinateRangeError(f"normalized point {p} outside [-1, 1]^3")
    ix, iy, iz = (cell_index(c, grid.n) for c in p)
    return compose_key(ix, iy, iz, grid.n)


@njit(parallel=True, cache=True)
def _keys_kernel(pts, n):
    count = pts.shape[0]
    out = np.empty(count, dtype=np.uint64)
    scale = float(1 << (n - 1))
    top = (1 << n) - 1
    for i in prange(count):
        key = 0
        for a in range(3):
            c = int(np.floor((np.float64(pts[i, a]) + 1.0) * scale))
            if c < 0:
                c = 0
            elif c > top:
                c = top
            key = (key << n) | c
        out[i] = key
    return out


def bucket_keys(cloud_norm, grid, threads=None):
    """Vectorized :func:`bucket_key` over a normalized cloud (computed in parallel)."""
    cloud_norm = as_cloud(cloud_norm)
    if len(cloud_norm) and np.abs(cloud_norm).max() > 1.0:
        raise CoordinateRangeError("normalized cloud has coordinates outside [-1, 1]")
    with worker_threads(threads):
        return _keys_kernel(cloud_norm, grid.n)


@dataclass(frozen=True)
class SubdivTable:
    """(bucket key, point index) pairs sorted ascending by key."""

    keys: np.ndarray
    indices: np.ndarray
    grid: GridParams

    def __len__(self):
        return len(self.keys)

    def counts(self):
        """``(unique keys, points per key)`` for the occupied buckets."""
        return np.unique(self.keys, return_counts=True)


def build_subdiv_table(cloud_norm, grid, threads=None):
    keys = bucket_keys(cloud_norm, grid, threads=threads)
    idx = np.arange(len(keys), dtype=np.int64)
    skeys, sidx = radix_sort_pairs(keys, idx, key_bits=grid.key_bits, threads=threads)
    return SubdivTable(skeys, sidx, grid)


def bucket_range(table, key):
    """Half-open run ``(start, count)`` of ``key`` within ``table.keys``."""
    k = np.uint64(key)
    start = int(np.searchsorted(table.keys, k, side="left"))
    stop = int(np.searchsorted(table.keys, k, side="right"))
    return start, stop - start


def neighbor_buckets(key, grid):
    """Keys of the up-to-27 cells around ``key`` (itself included), ascending."""
    n = grid.n
    top = grid.cells_per_axis - 1
    ix, iy, iz = decompose_key(key, n)
    out = []
    for jx in range(max(ix - 1, 0), min(ix + 1, top) + 1):
        for jy in range(max(iy - 1, 0), min(iy + 1, top) + 1):
            for jz in range(max(iz - 1, 0), min(iz + 1, top) + 1):
                out.append(compose_key(jx, jy, jz, n))
    return out
