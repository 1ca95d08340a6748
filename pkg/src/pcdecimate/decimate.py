"""Iterative neighbor-count / mark / random-elimination decimation over the bucket grid.

Each pass counts, for every surviving point, the other survivors inside the
neighbor radius (scanning only the 27 cells around it), marks points whose
count exceeds the threshold, then either deletes a random batch of the marked
points and repeats, or deletes all of them and stops when the batch would not
be filled.

Counts for pass 1 are computed from scratch in parallel. Later passes start
from the previous counts and subtract the contributions of the batch that was
just deleted, which gives exactly the from-scratch counts over the new survivor
set at a fraction of the cost.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numba import njit, prange

from .cloud import as_cloud, within_radius
from .errors import ConfigError, MaxPassesExceeded
from .grid import GridParams, build_subdiv_table, normalize
from .parallel import worker_threads

logger = logging.getLogger(__name__)

PHASES = ("normalize", "table_build", "mark_passes", "compaction")
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class FilterConfig:
    """Decimation parameters.

    Attributes:
        n: grid exponent, 2**n cells per axis.
        radius: neighbor distance in meters.
        threshold: a point is marked when it has strictly more neighbors than this.
        batch_size: points deleted per pass while more than this many are marked.
        seed: 64-bit seed for batch selection.
        max_passes: defensive cap on the pass loop.
    """

    n: int
    radius: float
    threshold: int
    batch_size: int = 1000
    seed: int = 0
    max_passes: int = 10000

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ConfigError(f"radius must be a positive finite length, got {self.radius}")
        if self.threshold < 0:
            raise ConfigError(f"threshold must be >= 0, got {self.threshold}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= self.seed <= _U64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.max_passes < 1:
            raise ConfigError("max_passes must be >= 1")
        self.grid  # validates n, warns once

    @cached_property
    def grid(self):
        return GridParams(self.n)


@dataclass
class FilterStats:
    passes: int
    deleted_total: int
    input_size: int
    output_size: int
    phase_times: dict = field(default_factory=dict)
    total_time: float = 0.0


def reciprocal_radii(radii):
    """Per-axis normalized radii to the reciprocal form :func:`within_radius` expects."""
    radii = np.asarray(radii, dtype=np.float64)
    return tuple(float(x) for x in np.where(np.isinf(radii), 0.0, 1.0 / radii))


def check_radius(radii, grid):
    """Reject radii larger than one cell edge, where 27 cells would miss neighbors."""
    radii = np.asarray(radii, dtype=np.float64)
    finite = radii[np.isfinite(radii)]
    if finite.size and finite.max() > grid.cell_edge:
        widest = float(finite.max())
        best = max(0, int(math.floor(math.log2(2.0 / widest))))
        raise ConfigError(
            f"neighbor radius spans {widest / grid.cell_edge:.4g} cells at n={grid.n}; "
            f"the 27-cell search would miss neighbors (use n <= {best} or a smaller radius)"
        )


class _Workspace:
    """Table-ordered copy of the normalized cloud plus lookup arrays.

    ``col_start`` holds, for every (ix, iy) column of the grid, where its keys
    begin in the sorted table; that is 4**n entries, never the 8**n buckets.
    """

    def __init__(self, cloud_norm, table):
        n = table.grid.n
        self.n = n
        self.order = table.indices
        self.keys = table.keys.astype(np.int64)
        self.pts = _gather_rows(cloud_norm, self.order)
        self.ustarts, self.uends, self.run_of, self.col_start, self.pos_of = _index_runs(
            self.keys, self.order, n
        )
        self.ukeys = self.keys[self.ustarts]


_RUN_CHUNK = 256


@njit(cache=True)
def _index_runs(keys, order, n):
    """Run bounds, run id per row, column offsets and inverse order in one sweep."""
    count = keys.shape[0]
    run_of = np.empty(count, dtype=np.int64)
    starts = np.empty(count, dtype=np.int64)
    col_start = np.zeros((1 << (2 * n)) + 1, dtype=np.int64)
    pos_of = np.empty(count, dtype=np.int64)
    runs = 0
    for i in range(count):
        if i == 0 or keys[i] != keys[i - 1]:
            starts[runs] = i
            runs += 1
        run_of[i] = runs - 1
        col_start[(keys[i] >> n) + 1] += 1
        pos_of[order[i]] = i
    for c in range(1, col_start.shape[0]):
        col_start[c] += col_start[c - 1]
    ustarts = starts[:runs].copy()
    uends = np.empty(runs, dtype=np.int64)
    uends[: runs - 1] = ustarts[1:]
    if runs:
        uends[runs - 1] = count
    return ustarts, uends, run_of, col_start, pos_of


@njit(parallel=True, cache=True)
def _gather_rows(pts, order):
    out = np.empty((order.shape[0], 3), dtype=pts.dtype)
    for i in prange(order.shape[0]):
        for a in range(3):
            out[i, a] = pts[order[i], a]
    return out


@njit(inline="always")
def _lower_bound(keys, lo, hi, key):
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(inline="always")
def _neighbor_spans(keys, col_start, key, n, lo, hi):
    """Fill ``lo``/``hi`` with the table spans of the cells around ``key``.

    The three z-cells of one (x, y) column are adjacent in key order, so the
    27-cell neighborhood is at most 9 contiguous spans. Returns how many.
    An empty ``col_start`` means "no column index": search all of ``keys``.
    """
    top = (1 << n) - 1
    ix = key >> (2 * n)
    iy = (key >> n) & top
    iz = key & top
    return _box_spans(
        keys, col_start, n,
        max(ix - 1, 0), min(ix + 1, top),
        max(iy - 1, 0), min(iy + 1, top),
        max(iz - 1, 0), min(iz + 1, top),
        lo, hi,
    )


@njit(inline="always")
def _box_spans(keys, col_start, n, x0, x1, y0, y1, z0, z1, lo, hi):
    """Spans of the cells in the inclusive index box; see :func:`_neighbor_spans`."""
    indexed = col_start.shape[0] > 0
    m = 0
    for jx in range(x0, x1 + 1):
        for jy in range(y0, y1 + 1):
            col = (jx << n) | jy
            if indexed:
                a = col_start[col]
                b = col_start[col + 1]
            else:
                a = 0
                b = keys.shape[0]
            if a == b:
                continue
            base = col << n
            a = _lower_bound(keys, a, b, base | z0)
            b = _lower_bound(keys, a, b, (base | z1) + 1)
            if b > a:
                lo[m] = a
                hi[m] = b
                m += 1
    return m


@njit(inline="always")
def _reach(vmin, vmax, ir, i, n):
    """Cells along one axis that a ball around ``[vmin, vmax]`` can touch.

    Clipped to ``i - 1 .. i + 1``. The slack keeps the cut conservative
    against float32 rounding in both the keys and the distance test.
    """
    top = (1 << n) - 1
    a = max(i - 1, 0)
    b = min(i + 1, top)
    if ir == 0.0:
        return a, b
    r = 1.0 / ir
    slack = 1e-6 * (1.0 + r)
    scale = float(1 << (n - 1))
    lo = int(np.floor((vmin - r - slack + 1.0) * scale))
    hi = int(np.floor((vmax + r + slack + 1.0) * scale))
    return max(a, min(lo, i)), min(b, max(hi, i))


@njit(parallel=True, cache=True)
def _count_all(pts, keys, col_start, ukeys, ustarts, uends, alive, n, irx, iry, irz):
    """Neighbor counts in table order; 0 for dead points."""
    counts = np.zeros(pts.shape[0], dtype=np.int64)
    top = (1 << n) - 1
    nruns = ukeys.shape[0]
    nchunks = (nruns + _RUN_CHUNK - 1) // _RUN_CHUNK
    for ch in prange(nchunks):
        lo = np.empty(9, dtype=np.int64)
        hi = np.empty(9, dtype=np.int64)
        for r in range(ch * _RUN_CHUNK, min(nruns, (ch + 1) * _RUN_CHUNK)):
            # bounds of the live points in this cell narrow the cells to visit
            x0 = y0 = z0 = np.inf
            x1 = y1 = z1 = -np.inf
            for s in range(ustarts[r], uends[r]):
                if alive[s]:
                    x0 = min(x0, pts[s, 0])
                    x1 = max(x1, pts[s, 0])
                    y0 = min(y0, pts[s, 1])
                    y1 = max(y1, pts[s, 1])
                    z0 = min(z0, pts[s, 2])
                    z1 = max(z1, pts[s, 2])
            if x0 > x1:
                continue
            key = ukeys[r]
            cx0, cx1 = _reach(x0, x1, irx, key >> (2 * n), n)
            cy0, cy1 = _reach(y0, y1, iry, (key >> n) & top, n)
            cz0, cz1 = _reach(z0, z1, irz, key & top, n)
            m = _box_spans(keys, col_start, n, cx0, cx1, cy0, cy1, cz0, cz1, lo, hi)
            for s in range(ustarts[r], uends[r]):
                if not alive[s]:
                    continue
                ax = pts[s, 0]
                ay = pts[s, 1]
                az = pts[s, 2]
                c = 0
                for b in range(m):
                    for t in range(lo[b], hi[b]):
                        if t != s and alive[t] and within_radius(
                            ax, ay, az, pts[t, 0], pts[t, 1], pts[t, 2], irx, iry, irz
                        ):
                            c += 1
                counts[s] = c
    return counts


@njit(cache=True)
def _affected_runs(keys, col_start, run_of, del_keys, n):
    """Ids of occupied runs within one cell of any deleted point's cell."""
    lo = np.empty(9, dtype=np.int64)
    hi = np.empty(9, dtype=np.int64)
    out = []
    last = -1
    for i in range(del_keys.shape[0]):
        key = del_keys[i]
        if key == last:
            continue
        last = key
        m = _neighbor_spans(keys, col_start, key, n, lo, hi)
        for b in range(m):
            for r in range(run_of[lo[b]], run_of[hi[b] - 1] + 1):
                out.append(r)
    return np.unique(np.array(out, dtype=np.int64))


@njit(parallel=True, cache=True)
def _subtract_deleted(pts, ukeys, ustarts, uends, alive, counts, del_pos, del_keys, runs, n, irx, iry, irz):
    """Remove the just-deleted points (positions ``del_pos``, ascending) from survivor counts."""
    no_index = np.empty(0, dtype=np.int64)
    for q in prange(runs.shape[0]):
        r = runs[q]
        lo = np.empty(9, dtype=np.int64)
        hi = np.empty(9, dtype=np.int64)
        m = _neighbor_spans(del_keys, no_index, ukeys[r], n, lo, hi)
        if m == 0:
            continue
        for s in range(ustarts[r], uends[r]):
            if not alive[s]:
                continue
            c = 0
            for b in range(m):
                for d in range(lo[b], hi[b]):
                    t = del_pos[d]
                    if within_radius(
                        pts[s, 0], pts[s, 1], pts[s, 2], pts[t, 0], pts[t, 1], pts[t, 2], irx, iry, irz
                    ):
                        c += 1
            counts[s] -= c


@njit(cache=True)
def _count_one(pts, keys, indices, alive, idx, n, irx, iry, irz):
    top = (1 << n) - 1
    scale = float(1 << (n - 1))
    cells = np.empty(3, dtype=np.int64)
    for a in range(3):
        c = int(np.floor((np.float64(pts[idx, a]) + 1.0) * scale))
        cells[a] = min(max(c, 0), top)
    c = 0
    for jx in range(max(cells[0] - 1, 0), min(cells[0] + 1, top) + 1):
        for jy in range(max(cells[1] - 1, 0), min(cells[1] + 1, top) + 1):
            for jz in range(max(cells[2] - 1, 0), min(cells[2] + 1, top) + 1):
                nk = (jx << (2 * n)) | (jy << n) | jz
                a = np.searchsorted(keys, nk, side="left")
                b = np.searchsorted(keys, nk, side="right")
                for t in range(a, b):
                    j = indices[t]
                    if j != idx and alive[j] and within_radius(
                        pts[idx, 0], pts[idx, 1], pts[idx, 2],
                        pts[j, 0], pts[j, 1], pts[j, 2], irx, iry, irz,
                    ):
                        c += 1
    return c


def _radii_for(cfg, record):
    radii = record.normalized_radii(cfg.radius)
    check_radius(radii, cfg.grid)
    return reciprocal_radii(radii)


def count_neighbors(idx, cloud_norm, table, cfg, snapshot, record):
    """Number of live points within ``cfg.radius`` of point ``idx``, itself excluded.

    Only the cells adjacent to ``idx``'s cell are scanned. ``record`` supplies
    the per-axis scale that turns the metric radius into normalized units.
    """
    ir = _radii_for(cfg, record)
    snapshot = np.asarray(snapshot, dtype=np.bool_)
    return int(
        _count_one(
            cloud_norm, table.keys.astype(np.int64), table.indices, snapshot, int(idx), table.grid.n, *ir
        )
    )


def neighbor_counts(cloud_norm, table, cfg, snapshot, record, threads=None):
    """:func:`count_neighbors` for every point at once (parallel over occupied cells).

    Returns an int64 array indexed like the cloud; dead points get 0.
    """
    ir = _radii_for(cfg, record)
    ws = _Workspace(cloud_norm, table)
    alive_s = np.asarray(snapshot, dtype=np.bool_)[ws.order]
    with worker_threads(threads):
        counts_s = _count_all(
            ws.pts, ws.keys, ws.col_start, ws.ukeys, ws.ustarts, ws.uends, alive_s, ws.n, *ir
        )
    counts = np.empty_like(counts_s)
    counts[ws.order] = counts_s
    return counts


def mark_pass(cloud_norm, table, cfg, snapshot, record, threads=None):
    """Boolean mask of survivors whose neighbor count exceeds ``cfg.threshold``.

    Every count is taken against the same ``snapshot``, so the result does not
    depend on evaluation order or worker count.
    """
    snapshot = np.asarray(snapshot, dtype=np.bool_)
    counts = neighbor_counts(cloud_norm, table, cfg, snapshot, record, threads=threads)
    return snapshot & (counts > cfg.threshold)


def stream_seed(seed, pass_no):
    return (int(seed) ^ int(pass_no)) & _U64


@njit(cache=True)
def _partial_shuffle(cand, js):
    for i in range(js.shape[0]):
        j = js[i]
        tmp = cand[i]
        cand[i] = cand[j]
        cand[j] = tmp
    return cand[: js.shape[0]]


def select_random_marked(marked, batch_size, seed, pass_no):
    """Choose ``batch_size`` distinct marked indices.

    A partial Fisher-Yates shuffle runs over the ascending list of marked
    indices, drawing from a PCG64 generator seeded with ``seed ^ pass_no``.

    Raises:
        ValueError: fewer than ``batch_size + 1`` points are marked.
    """
    return _select_from(np.flatnonzero(marked).astype(np.int64), batch_size, seed, pass_no)


def _select_from(cand, batch_size, seed, pass_no):
    """:func:`select_random_marked` on an ascending candidate array it may reorder."""
    m = len(cand)
    if m <= batch_size:
        raise ValueError(f"{m} marked points; batch selection needs more than {batch_size}")
    rng = np.random.Generator(np.random.PCG64(stream_seed(seed, pass_no)))
    js = rng.integers(np.arange(batch_size, dtype=np.int64), m, dtype=np.int64)
    return _partial_shuffle(cand, js).copy()


def decimate(cloud, cfg, threads=None):
    """Run the full bucketed decimation filter.

    Args:
        cloud: point cloud in meters (not modified, not copied).
        cfg: :class:`FilterConfig`.
        threads: worker count for the parallel phases; ``None`` uses the
            ``PCDECIMATE_THREADS`` default. The output does not depend on it.

    Returns:
        ``(survivors, FilterStats)``. Survivors are the input rows, bit for
        bit, in their original order.

    Raises:
        EmptyCloudError: the cloud has no points.
        ConfigError: the radius is wider than one grid cell on some axis.
        MaxPassesExceeded: the pass loop hit ``cfg.max_passes``.
    """
    t_start = time.perf_counter()
    cloud = as_cloud(cloud)
    grid = cfg.grid
    phases = {}

    with worker_threads(threads) as n_threads:
        t0 = time.perf_counter()
        norm, record = normalize(cloud, threads=n_threads)
        ir = _radii_for(cfg, record)
        phases["normalize"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        table = build_subdiv_table(norm, grid, threads=n_threads)
        ws = _Workspace(norm, table)
        phases["table_build"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        alive_s, passes = _pass_loop(ws, cfg, ir)
        phases["mark_passes"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    alive = np.empty_like(alive_s)
    alive[ws.order] = alive_s
    out = cloud[alive]
    phases["compaction"] = time.perf_counter() - t0

    stats = FilterStats(
        passes=passes,
        deleted_total=len(cloud) - len(out),
        input_size=len(cloud),
        output_size=len(out),
        phase_times=phases,
        total_time=time.perf_counter() - t_start,
    )
    logger.debug("decimate: %d -> %d points in %d passes", stats.input_size, stats.output_size, passes)
    return out, stats


def _pass_loop(ws, cfg, ir):
    alive_s = np.ones(len(ws.order), dtype=np.bool_)
    counts_s = _count_all(
        ws.pts, ws.keys, ws.col_start, ws.ukeys, ws.ustarts, ws.uends, alive_s, ws.n, *ir
    )
    # counts only fall, so the marked set only shrinks: keep it as ascending
    # original indices and refilter just those rows each pass
    cand = np.sort(ws.order[np.flatnonzero(counts_s > cfg.threshold)])
    passes = 0
    while True:
        passes += 1
        if passes > cfg.max_passes:
            raise MaxPassesExceeded(f"no fixpoint after {cfg.max_passes} passes")
        if len(cand) <= cfg.batch_size:
            alive_s[ws.pos_of[cand]] = False
            return alive_s, passes
        chosen = _select_from(cand.copy(), cfg.batch_size, cfg.seed, passes)
        del_pos = np.sort(ws.pos_of[chosen])
        alive_s[del_pos] = False
        del_keys = ws.keys[del_pos]
        runs = _affected_runs(ws.keys, ws.col_start, ws.run_of, del_keys, ws.n)
        _subtract_deleted(
            ws.pts, ws.ukeys, ws.ustarts, ws.uends, alive_s, counts_s, del_pos, del_keys, runs, ws.n, *ir
        )
        pos = ws.pos_of[cand]
        cand = cand[alive_s[pos] & (counts_s[pos] > cfg.threshold)]
