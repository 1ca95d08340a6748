import numpy as np
import pytest

from pcdecimate.baseline import (
    brute_force_decimate,
    brute_force_neighbor_count,
    voxel_centroid_filter,
    voxel_cells,
)
from pcdecimate.decimate import FilterConfig, decimate
from pcdecimate.errors import ConfigError


def occupied_cells(cloud, leaf):
    """Hash-map histogram of leaf cells on the lattice through the origin."""
    hist = {}
    for p in cloud.astype(np.float64):
        cell = tuple(int(v) for v in np.floor(p / leaf))
        hist.setdefault(cell, []).append(p)
    return hist


class TestVoxelCentroid:
    def test_single_leaf_gives_mean(self):
        pts = np.array([[0.001, 0.002, 0.003], [0.004, 0.001, 0.0], [0.002, 0.0, 0.001]], dtype=np.float32)
        out = voxel_centroid_filter(pts, 0.02)
        np.testing.assert_allclose(out, [pts.astype(np.float64).mean(axis=0)], rtol=1e-6)

    def test_distinct_leaves(self):
        pts = np.array([[0.01, 0, 0], [0.03, 0, 0]], dtype=np.float32)
        np.testing.assert_array_equal(voxel_centroid_filter(pts, 0.02), pts)

    def test_rejects_bad_leaf(self):
        with pytest.raises(ConfigError):
            voxel_centroid_filter(np.zeros((2, 3), dtype=np.float32), 0)

    def test_against_histogram(self, rng):
        pts = rng.uniform(0, 1, size=(10_000, 3)).astype(np.float32)
        leaf = 0.05
        hist = occupied_cells(pts, leaf)
        out = voxel_centroid_filter(pts, leaf)
        assert len(out) == len(hist)
        # output is ordered by cell key, so it lines up with sorted cells
        for c, cell in zip(out, sorted(hist)):
            np.testing.assert_allclose(c, np.mean(hist[cell], axis=0), rtol=1e-6, atol=1e-7)
            lo = np.array(cell) * leaf
            assert (c >= lo - 1e-6).all() and (c <= lo + leaf + 1e-6).all()

    def test_size_idempotent(self, rng):
        pts = rng.normal(size=(5000, 3)).astype(np.float32)
        once = voxel_centroid_filter(pts, 0.3)
        assert len(voxel_centroid_filter(once, 0.3)) == len(once)


class TestBruteForce:
    def test_single_point(self):
        assert brute_force_neighbor_count(np.zeros((1, 3), np.float32), 0, 0.1, [True]) == 0

    def test_exact_radius_counts(self):
        pts = np.array([[0, 0, 0], [0.5, 0, 0]], dtype=np.float32)
        assert brute_force_neighbor_count(pts, 0, 0.5, [True, True]) == 1
        assert brute_force_neighbor_count(pts, 1, 0.5, [True, True]) == 1
        assert brute_force_neighbor_count(pts, 0, 0.4999, [True, True]) == 0

    def test_fixpoint(self, rng):
        pts = rng.uniform(0, 50, size=(300, 3)).astype(np.float32)
        out, stats = brute_force_decimate(pts, FilterConfig(n=4, radius=0.01, threshold=0))
        np.testing.assert_array_equal(out, pts)
        assert stats.passes == 1

    def test_agrees_with_decimate(self, rng):
        pts = rng.normal(size=(3000, 3)).astype(np.float32)
        ext = pts.max(axis=0).astype(np.float64) - pts.min(axis=0)
        cfg = FilterConfig(n=5, radius=float(ext.min()) / 32, threshold=1, batch_size=25, seed=4)
        a, sa = decimate(pts, cfg)
        b, sb = brute_force_decimate(pts, cfg)
        np.testing.assert_array_equal(a, b)
        assert sa.passes == sb.passes
