"""Timed benchmark suites over filters, resolutions and worker counts."""

import csv
import io
import logging
import math
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .baseline import voxel_centroid_filter
from .cloud import as_cloud, compute_aabb
from .decimate import FilterConfig, decimate
from .errors import ConfigError, DeterminismError
from .parallel import resolve_threads

logger = logging.getLogger(__name__)

IMPLS = ("bucket-parallel", "bucket-serial", "voxel-centroid")
CSV_COLUMNS = (
    "impl",
    "resolution_m",
    "threads",
    "repetitions",
    "mean_ms",
    "stddev_ms",
    "input_size",
    "output_size",
)
N_RANGE = (4, 9)


@dataclass
class BenchRecord:
    impl: str
    resolution_m: float
    threads: int
    repetitions: int
    mean_ms: float
    stddev_ms: float
    input_size: int
    output_size: int
    n: int = None
    phases_ms: dict = field(default_factory=dict)

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class SuiteConfig:
    """What to run. ``radius=None`` picks the widest radius the grid allows."""

    resolutions: tuple = (0.02, 0.04, 0.05)
    threads: tuple = (None,)
    impls: tuple = IMPLS
    repetitions: int = 10
    warmup: int = 2
    threshold: int = 3
    radius: float = None
    batch_size: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.repetitions < 3:
            raise ConfigError("at least 3 repetitions are needed for a spread estimate")
        if self.warmup < 0:
            raise ConfigError("warmup must be >= 0")
        if not self.resolutions or min(self.resolutions) <= 0:
            raise ConfigError("resolutions must be positive")
        for impl in self.impls:
            if impl not in IMPLS:
                raise ConfigError(f"unknown impl {impl!r}; choose from {IMPLS}")


def grid_exponent(resolution, max_extent):
    """Smallest n whose cell edge is no wider than ``resolution``, clamped to [4, 9]."""
    if max_extent <= 0:
        return N_RANGE[0]
    n = math.ceil(math.log2(max_extent / resolution))
    return min(max(n, N_RANGE[0]), N_RANGE[1])


def auto_radius(extent, n, resolution):
    """Widest radius that still fits in one cell on every non-degenerate axis."""
    edges = [e / (1 << n) for e in extent if e > 0]
    return min([resolution, *edges])


def filter_config(cloud, resolution, suite):
    extent = compute_aabb(cloud).extent
    n = grid_exponent(resolution, float(extent.max()))
    radius = suite.radius if suite.radius is not None else auto_radius(extent, n, resolution)
    return FilterConfig(
        n=n, radius=radius, threshold=suite.threshold, batch_size=suite.batch_size, seed=suite.seed
    )


def _runner(impl, cloud, resolution, suite, threads):
    if impl == "voxel-centroid":
        return lambda: (voxel_centroid_filter(cloud, resolution), None), None
    cfg = filter_config(cloud, resolution, suite)
    return lambda: decimate(cloud, cfg, threads=threads), cfg


def _cells(suite):
    for impl in suite.impls:
        for res in suite.resolutions:
            if impl == "bucket-parallel":
                for t in suite.threads:
                    yield impl, res, resolve_threads(t)
            else:
                yield impl, res, 1


def run_bench(cloud, suite, clock=time.perf_counter):
    """Time every (impl, resolution, threads) cell of ``suite`` on ``cloud``.

    Each cell runs ``suite.warmup`` untimed calls, then ``suite.repetitions``
    timed ones. ``clock`` returns seconds and is read exactly twice per timed
    call, so a fake clock gives reproducible statistics.

    Raises:
        DeterminismError: two repetitions of one cell returned different clouds.
    """
    cloud = as_cloud(cloud)
    records = []
    for impl, res, threads in _cells(suite):
        run, cfg = _runner(impl, cloud, res, suite, threads)
        for _ in range(suite.warmup):
            run()
        times = []
        phases = {}
        first = None
        for rep in range(suite.repetitions):
            t0 = clock()
            out, stats = run()
            t1 = clock()
            times.append((t1 - t0) * 1e3)
            if stats is not None:
                for k, v in stats.phase_times.items():
                    phases[k] = phases.get(k, 0.0) + v * 1e3 / suite.repetitions
            if first is None:
                first = out
            elif not np.array_equal(first, out):
                raise DeterminismError(f"{impl} at {res} m, {threads} threads: repetition {rep} differs")
        rec = BenchRecord(
            impl=impl,
            resolution_m=res,
            threads=threads,
            repetitions=suite.repetitions,
            mean_ms=statistics.fmean(times),
            stddev_ms=statistics.stdev(times),
            input_size=len(cloud),
            output_size=len(first),
            n=cfg.n if cfg else None,
            phases_ms=phases,
        )
        logger.info(
            "%s res=%.3g m n=%s radius=%s threads=%d: %.3f ms ± %.3f (%d -> %d points)",
            impl, res, rec.n, cfg.radius if cfg else "-", threads,
            rec.mean_ms, rec.stddev_ms, rec.input_size, rec.output_size,
        )
        records.append(rec)
    return records


def emit_csv(records, path=None):
    """Write records as CSV to ``path``; return the text when ``path`` is None."""
    if not records:
        raise ValueError("no records to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.row())
    text = buf.getvalue()
    if path is None:
        return text
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return None


def emit_table(records):
    if not records:
        raise ValueError("no records to format")
    rows = [list(CSV_COLUMNS)]
    for rec in records:
        rows.append(
            [
                rec.impl,
                f"{rec.resolution_m:g}",
                str(rec.threads),
                str(rec.repetitions),
                f"{rec.mean_ms:.3f}",
                f"{rec.stddev_ms:.3f}",
                str(rec.input_size),
                str(rec.output_size),
            ]
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(CSV_COLUMNS))]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"
