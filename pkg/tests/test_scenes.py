import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcdecimate.errors import ConfigError
from pcdecimate.scenes import KINDS, SceneSpec, corridor_surfaces, gen_synthetic


@pytest.mark.parametrize("kind", KINDS)
def test_zero_points(kind):
    cloud = gen_synthetic(SceneSpec(kind=kind, point_count=0))
    assert cloud.shape == (0, 3)
    assert cloud.dtype == np.float32


@pytest.mark.parametrize("kind", KINDS)
def test_same_spec_same_cloud(kind):
    spec = SceneSpec(kind=kind, point_count=5000, noise_sigma=0.01, seed=7)
    a = gen_synthetic(spec)
    b = gen_synthetic(spec)
    assert a.tobytes() == b.tobytes()
    assert gen_synthetic(SceneSpec(kind=kind, point_count=5000, noise_sigma=0.01, seed=8)).tobytes() != a.tobytes()


@settings(max_examples=25, deadline=None)
@given(kind=st.sampled_from(KINDS), count=st.integers(0, 3000), seed=st.integers(0, 2**32 - 1))
def test_exact_point_count(kind, count, seed):
    cloud = gen_synthetic(SceneSpec(kind=kind, point_count=count, noise_sigma=0.02, seed=seed))
    assert cloud.shape == (count, 3)
    assert np.isfinite(cloud).all()


def test_corridor_points_lie_on_surfaces():
    spec = SceneSpec(point_count=100_000, seed=3)
    cloud = gen_synthetic(spec).astype(np.float64)
    rects = corridor_surfaces(spec)
    lo = np.array([r[0] for r in rects])
    hi = np.array([r[1] for r in rects])
    eps = 1e-5
    inside = np.zeros(len(cloud), dtype=bool)
    for a, b in zip(lo, hi):
        inside |= ((cloud >= a - eps) & (cloud <= b + eps)).all(axis=1)
    assert inside.all()


def test_corridor_has_floor_and_walls():
    spec = SceneSpec(point_count=20_000, extents=(8.0, 2.0, 3.0))
    cloud = gen_synthetic(spec)
    assert np.count_nonzero(cloud[:, 2] == 0) > 0
    assert np.count_nonzero(np.isclose(cloud[:, 1], -1.0)) > 0
    assert np.count_nonzero(np.isclose(cloud[:, 1], 1.0)) > 0


def test_uniform_box_within_extents():
    cloud = gen_synthetic(SceneSpec(kind="uniform-box", extents=(2.0, 1.0, 0.5), point_count=10_000))
    assert cloud.min() >= 0
    assert (cloud.max(axis=0) <= [2.0, 1.0, 0.5]).all()


def test_clusters_without_noise_collapse_to_centers():
    cloud = gen_synthetic(SceneSpec(kind="gaussian-clusters", point_count=1000))
    assert len(np.unique(cloud, axis=0)) <= 8


def test_noise_perturbs():
    base = SceneSpec(point_count=2000, seed=1)
    noisy = SceneSpec(point_count=2000, seed=1, noise_sigma=0.01)
    diff = gen_synthetic(noisy).astype(np.float64) - gen_synthetic(base)
    assert 0.005 < diff.std() < 0.02


@pytest.mark.parametrize(
    "kw",
    [
        {"kind": "sphere"},
        {"point_count": -1},
        {"noise_sigma": -0.1},
        {"extents": (1.0, 0.0, 1.0)},
        {"extents": (1.0, 1.0)},
    ],
)
def test_invalid_spec(kw):
    with pytest.raises(ConfigError):
        SceneSpec(**kw)
