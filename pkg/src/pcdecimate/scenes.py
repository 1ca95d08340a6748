"""Deterministic synthetic point clouds for tests and benchmarks."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

KINDS = ("corridor", "uniform-box", "gaussian-clusters")
N_CLUSTERS = 8
N_OBSTACLES = 4


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of a synthetic scene.

    ``extents`` is (length, width, height) in meters. For a corridor that is
    the hallway: floor at z=0, walls at y=±width/2, running along x from 0.
    Other kinds fill the box [0, length] x [0, width] x [0, height]: uniformly,
    or as Gaussian blobs of standard deviation ``noise_sigma`` around random
    centers (so ``noise_sigma=0`` stacks every point onto a few centers).
    """

    kind: str = "corridor"
    extents: tuple = (10.0, 3.0, 2.5)
    point_count: int = 100_000
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"scene kind must be one of {KINDS}, got {self.kind!r}")
        if len(self.extents) != 3 or min(self.extents) <= 0:
            raise ConfigError("extents must be three positive lengths")
        if self.point_count < 0:
            raise ConfigError("point_count must be >= 0")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        object.__setattr__(self, "extents", tuple(float(e) for e in self.extents))


def corridor_surfaces(spec):
    """Axis-aligned rectangles making up the corridor, as ``(lo, hi)`` corner pairs.

    Floor, two walls, then the faces of a few boxes standing against the walls.
    Box placement is drawn from ``spec.seed``.
    """
    length, width, height = spec.extents
    half = width / 2.0
    rects = [
        ((0.0, -half, 0.0), (length, half, 0.0)),
        ((0.0, -half, 0.0), (length, -half, height)),
        ((0.0, half, 0.0), (length, half, height)),
    ]
    rng = np.random.default_rng([spec.seed, 1])
    for k in range(N_OBSTACLES):
        size = rng.uniform(0.1, 0.25, size=3) * np.array([length / 4, width, height])
        x0 = (k + rng.uniform(0.1, 0.5)) * length / N_OBSTACLES
        if k % 2:
            y0 = half - size[1]
        else:
            y0 = -half
        lo = np.array([x0, y0, 0.0])
        hi = lo + size
        for axis in range(3):
            for face in (lo[axis], hi[axis]):
                a = lo.copy()
                b = hi.copy()
                a[axis] = b[axis] = face
                rects.append((tuple(a), tuple(b)))
    return rects


def _sample_rects(rects, count, rng):
    lo = np.array([r[0] for r in rects])
    hi = np.array([r[1] for r in rects])
    span = hi - lo
    # each rect is flat along one axis; area is the product of the other two spans
    area = np.prod(np.where(span == 0, 1.0, span), axis=1)
    per_rect = rng.multinomial(count, area / area.sum())
    which = np.repeat(np.arange(len(rects)), per_rect)
    return lo[which] + rng.random((count, 3)) * span[which]


def gen_synthetic(spec):
    """Generate the scene described by ``spec``; same spec, same cloud."""
    rng = np.random.default_rng([spec.seed, 0])
    count = spec.point_count
    extents = np.array(spec.extents)
    if count == 0:
        return np.zeros((0, 3), dtype=np.float32)
    if spec.kind == "corridor":
        pts = _sample_rects(corridor_surfaces(spec), count, rng)
    elif spec.kind == "uniform-box":
        pts = rng.random((count, 3)) * extents
    else:
        centers = rng.random((N_CLUSTERS, 3)) * extents
        pts = centers[rng.integers(0, N_CLUSTERS, size=count)]
    if spec.noise_sigma > 0:
        pts = pts + rng.normal(0.0, spec.noise_sigma, size=pts.shape)
    return np.ascontiguousarray(pts, dtype=np.float32)
