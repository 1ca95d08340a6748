"""Reference filters: voxel-grid centroids and bucket-free brute-force decimation.

Everything here is single-threaded on purpose. The brute-force routines are the
oracles the bucketed filter is checked against; they never look at the grid.
"""

import time

import numpy as np
from numba import njit

from .cloud import as_cloud, compute_aabb, within_radius
from .decimate import FilterStats, _radii_for, select_random_marked
from .errors import ConfigError, MaxPassesExceeded
from .grid import normalize


def voxel_centroid_filter(cloud, leaf):
    """Replace the points of each occupied cube by their centroid.

    Cubes have edge ``leaf`` and lie on the lattice through the origin; cell
    indices are offset so the cube holding the AABB minimum is (0, 0, 0).
    Centroids are accumulated in float64 and emitted as float32, ordered by
    ascending row-major cell key.
    """
    if not leaf > 0:
        raise ConfigError(f"leaf edge must be positive, got {leaf}")
    cloud = as_cloud(cloud)
    compute_aabb(cloud)  # rejects empty clouds
    cells = voxel_cells(cloud, leaf)
    cells -= cells.min(axis=0)
    dims = cells.max(axis=0) + 1
    keys = (cells[:, 0] * dims[1] + cells[:, 1]) * dims[2] + cells[:, 2]
    _, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    pts = cloud.astype(np.float64)
    sums = np.empty((len(counts), 3))
    for a in range(3):
        sums[:, a] = np.bincount(inverse, weights=pts[:, a], minlength=len(counts))
    return (sums / counts[:, None]).astype(np.float32)


def voxel_cells(cloud, leaf):
    """Integer lattice index of the ``leaf``-sized cube holding each point."""
    return np.floor(np.asarray(cloud, dtype=np.float64) / leaf).astype(np.int64)


@njit(cache=True)
def _bf_count(pts, idx, alive, irx, iry, irz):
    c = 0
    for j in range(pts.shape[0]):
        if j != idx and alive[j] and within_radius(
            pts[idx, 0], pts[idx, 1], pts[idx, 2], pts[j, 0], pts[j, 1], pts[j, 2], irx, iry, irz
        ):
            c += 1
    return c


@njit(cache=True)
def _bf_count_all(pts, alive, irx, iry, irz):
    n = pts.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        if not alive[i]:
            continue
        for j in range(i + 1, n):
            if alive[j] and within_radius(
                pts[i, 0], pts[i, 1], pts[i, 2], pts[j, 0], pts[j, 1], pts[j, 2], irx, iry, irz
            ):
                counts[i] += 1
                counts[j] += 1
    return counts


@njit(cache=True)
def _bf_forget(pts, counts, deleted, irx, iry, irz):
    for d in deleted:
        for j in range(pts.shape[0]):
            if j != d and within_radius(
                pts[d, 0], pts[d, 1], pts[d, 2], pts[j, 0], pts[j, 1], pts[j, 2], irx, iry, irz
            ):
                counts[j] -= 1


def _reciprocal(radius):
    r = np.broadcast_to(np.asarray(radius, dtype=np.float64), (3,))
    return tuple(0.0 if np.isinf(x) else 1.0 / float(x) for x in r)


def brute_force_neighbor_count(cloud_norm, idx, radius, snapshot):
    """Live neighbors of ``idx`` by a full scan.

    ``radius`` is in normalized units, either one value or one per axis
    (``inf`` for a collapsed axis).
    """
    pts = as_cloud(cloud_norm)
    return int(_bf_count(pts, int(idx), np.asarray(snapshot, dtype=np.bool_), *_reciprocal(radius)))


def brute_force_neighbor_counts(cloud_norm, radius, snapshot):
    """All-pairs version of :func:`brute_force_neighbor_count`; dead points get 0."""
    pts = as_cloud(cloud_norm)
    return _bf_count_all(pts, np.asarray(snapshot, dtype=np.bool_), *_reciprocal(radius))


def brute_force_decimate(cloud, cfg):
    """Sequential, grid-free twin of :func:`pcdecimate.decimate.decimate`.

    Same pass semantics and the same batch-selection stream, so for a given
    ``(cloud, cfg)`` the two produce bit-identical output.
    """
    t_start = time.perf_counter()
    cloud = as_cloud(cloud)
    norm, record = normalize(cloud, threads=1)
    ir = _radii_for(cfg, record)
    alive = np.ones(len(cloud), dtype=np.bool_)
    counts = _bf_count_all(norm, alive, *ir)
    passes = 0
    while True:
        passes += 1
        if passes > cfg.max_passes:
            raise MaxPassesExceeded(f"no fixpoint after {cfg.max_passes} passes")
        marked = alive & (counts > cfg.threshold)
        if np.count_nonzero(marked) <= cfg.batch_size:
            alive &= ~marked
            break
        chosen = select_random_marked(marked, cfg.batch_size, cfg.seed, passes)
        alive[chosen] = False
        _bf_forget(norm, counts, chosen, *ir)
    out = cloud[alive]
    stats = FilterStats(
        passes=passes,
        deleted_total=len(cloud) - len(out),
        input_size=len(cloud),
        output_size=len(out),
        total_time=time.perf_counter() - t_start,
    )
    return out, stats
