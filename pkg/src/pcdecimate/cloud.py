"""Core geometric types and elementary point-cloud operations.

A point cloud is a C-contiguous ``(N, 3)`` ``float32`` numpy array. Functions
here accept anything array-like and validate it with :func:`as_cloud`, which
hands back the caller's buffer untouched when it already has that layout.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import CloudError, EmptyCloudError, InvalidRangeError, NotOrthonormalError

DTYPE = np.float32


def as_cloud(points):
    """Validate ``points`` as a point cloud without duplicating it.

    Args:
        points: array-like of shape ``(N, 3)``.

    Returns:
        A C-contiguous float32 array. When ``points`` already is one, the very
        same object is returned.

    Raises:
        CloudError: wrong shape or a NaN/Inf coordinate.
    """
    arr = np.asarray(points)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise CloudError(f"expected an (N, 3) array, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=DTYPE)
    if arr.size and not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
        raise CloudError(f"point {bad} has a non-finite coordinate")
    return arr


def as_point(p):
    arr = np.asarray(p, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise CloudError(f"a point has 3 components, got {arr.shape[0]}")
    if not np.isfinite(arr).all():
        raise CloudError("point has a non-finite coordinate")
    return arr


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box, inclusive on both ends."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = as_point(self.min)
        hi = as_point(self.max)
        if (lo > hi).any():
            raise InvalidRangeError(f"box min {lo} exceeds max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def extent(self):
        return self.max - self.min

    def contains(self, cloud):
        cloud = np.asarray(cloud)
        return bool(((cloud >= self.min) & (cloud <= self.max)).all())


def distance(p1, p2):
    """Euclidean distance between two points."""
    a = as_point(p1)
    b = as_point(p2)
    return math.sqrt(float(((b - a) ** 2).sum()))


def compute_aabb(cloud):
    cloud = as_cloud(cloud)
    if len(cloud) == 0:
        raise EmptyCloudError("bounding box of an empty cloud is undefined")
    lo, hi = _column_bounds(cloud)
    return Aabb(lo, hi)


@njit(cache=True)
def _column_bounds(pts):
    # numpy's axis-0 min/max on a (N, 3) array is several times slower
    lo = pts[0].copy()
    hi = pts[0].copy()
    for i in range(1, pts.shape[0]):
        for a in range(3):
            v = pts[i, a]
            if v < lo[a]:
                lo[a] = v
            elif v > hi[a]:
                hi[a] = v
    return lo, hi


def crop_z(cloud, z_min=-np.inf, z_max=np.inf):
    """Keep the points with ``z_min <= z <= z_max`` in their original order."""
    if z_min > z_max:
        raise InvalidRangeError(f"z_min {z_min} > z_max {z_max}")
    cloud = as_cloud(cloud)
    z = cloud[:, 2]
    return cloud[(z >= z_min) & (z <= z_max)]


def transform_rigid(cloud, rotation, translation, tol=1e-5):
    """Apply ``p -> R p + t`` to every point.

    Raises:
        NotOrthonormalError: ``R Rᵀ`` differs from identity by more than ``tol``.
    """
    cloud = as_cloud(cloud)
    r = np.asarray(rotation, dtype=np.float64)
    if r.shape != (3, 3):
        raise NotOrthonormalError(f"rotation must be 3x3, got {r.shape}")
    if np.abs(r @ r.T - np.eye(3)).max() > tol:
        raise NotOrthonormalError("rotation matrix is not orthonormal")
    t = as_point(translation)
    out = cloud.astype(np.float64) @ r.T + t
    return out.astype(DTYPE)


@njit(inline="always")
def within_radius(ax, ay, az, bx, by, bz, irx, iry, irz):
    """Ellipsoidal neighbor test in normalized space.

    ``ir*`` are reciprocal per-axis radii (0 for a collapsed axis). Every
    counting routine goes through this one predicate so that the bucketed
    filter and the brute-force oracle make bit-identical decisions.
    """
    d = (bx - ax) * irx
    s = d * d
    d = (by - ay) * iry
    s += d * d
    d = (bz - az) * irz
    s += d * d
    return s <= 1.0
