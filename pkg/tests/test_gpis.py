import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpisx.errors import EmptyCloud
from gpisx.geometry import Aabb3, PointCloud3
from gpisx.gp import GpTrainingSet, fit, predict
from gpisx.gpis import (
    GPIS_KERNEL,
    SurfaceLabel,
    TactileBatch,
    add_tactile,
    build_gpis,
    gpis_training_set,
    query_field,
)
from gpisx.isosurface import marching_cubes, sample_volume


def plane_cloud(n=15, extent=0.1, z=0.0):
    g = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(g, g)
    return PointCloud3(np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, z)]))


def test_training_set_size_for_ten_points(rng):
    ts = gpis_training_set(rng.uniform(size=(10, 3)), seed=0)
    assert len(ts) == 14
    assert sorted(set(ts.targets)) == [-1, 0, 1]
    assert (ts.targets == 1).sum() == 2 and (ts.targets == -1).sum() == 2


def test_off_surface_points_are_shifted_copies(rng):
    pts = rng.uniform(size=(12, 3))
    ts = gpis_training_set(pts, seed=1, offset=0.05)
    n = len(pts)
    for x, y in zip(ts.inputs[n:], ts.targets[n:]):
        src = x - [0, 0, 0.05 * y]
        assert np.min(np.linalg.norm(pts - src, axis=1)) < 1e-12


def test_same_seed_same_training_set(rng):
    pts = rng.uniform(size=(40, 3))
    a = gpis_training_set(pts, seed=9)
    b = gpis_training_set(pts, seed=9)
    np.testing.assert_array_equal(a.inputs, b.inputs)
    np.testing.assert_array_equal(a.targets, b.targets)


def test_plane_sign_above_and_below():
    m = build_gpis(plane_cloud())
    p = query_field(m, [[0.0, 0.0, 0.05], [0.0, 0.0, -0.05]])
    assert p.mean[0] > 0 > p.mean[1]


def test_surface_point_is_near_zero():
    cloud = plane_cloud()
    m = build_gpis(cloud)
    assert abs(query_field(m, cloud.points[112:113]).mean[0]) < 0.05


def test_far_field_is_prior():
    m = build_gpis(plane_cloud())
    p = query_field(m, [[5.0, 5.0, 5.0]])
    assert abs(p.mean[0]) < 1e-3
    assert p.variance[0] == pytest.approx(GPIS_KERNEL.sigma_e2, abs=1e-3)


def test_midpoint_of_symmetric_pair_is_zero():
    tr = GpTrainingSet([[0, 0, 0.03], [0, 0, -0.03]], [1.0, -1.0], 1e-4)
    m = fit(GPIS_KERNEL, tr)
    assert abs(predict(m, [[0, 0, 0]]).mean[0]) < 0.05


def test_empty_cloud():
    with pytest.raises(EmptyCloud):
        build_gpis(np.empty((0, 3)))


def test_batch_validation():
    with pytest.raises(ValueError):
        TactileBatch(np.empty((0, 3)), np.empty(0, dtype=int))
    with pytest.raises(ValueError):
        TactileBatch(np.zeros((1, 3)), np.array([2]))
    with pytest.raises(TypeError):
        add_tactile(build_gpis(plane_cloud(5)), [[0, 0, 0]])


def test_surface_label_values():
    assert {int(v) for v in SurfaceLabel} == {-1, 0, 1}


def test_above_grid_over_a_gap_reduces_variance():
    cloud = PointCloud3(plane_cloud(21, 0.2).points[np.abs(plane_cloud(21, 0.2).xy).max(axis=1) > 0.06])
    m = build_gpis(cloud)
    g = np.linspace(-0.004, 0.004, 4)
    X, Y = np.meshgrid(g, g)
    pts = np.column_stack([X.ravel(), Y.ravel(), np.full(16, 0.03)])
    batch = TactileBatch(pts, np.ones(16, dtype=int))
    before = query_field(m, pts).variance
    after = query_field(add_tactile(m, batch), pts).variance
    assert np.all(after < before)


def test_contact_points_pull_mean_to_zero():
    cloud = PointCloud3(plane_cloud(21, 0.2).points[np.abs(plane_cloud(21, 0.2).xy).max(axis=1) > 0.06])
    m = build_gpis(cloud, seed=2)
    pts = np.array([[0.0, 0.0, -0.02], [0.01, 0.0, -0.02]])
    before = np.abs(query_field(m, pts).mean)
    after = np.abs(query_field(add_tactile(m, TactileBatch(pts, np.zeros(2, dtype=int))), pts).mean)
    assert np.all(after < before)


def test_add_tactile_keeps_old_snapshot():
    m = build_gpis(plane_cloud(5))
    n = m.gp.n
    m2 = add_tactile(m, TactileBatch(np.zeros((1, 3)), np.array([0])))
    assert m.gp.n == n and m2.gp.n == n + 1


def test_plane_level_set_within_one_voxel():
    m = build_gpis(plane_cloud(21, 0.2), seed=5)
    region = Aabb3([-0.1, -0.1, -0.06], [0.1, 0.1, 0.06])
    mesh = marching_cubes(sample_volume(m, region, 0.01, variance="none"))
    assert len(mesh) > 0
    assert np.abs(mesh.vertices[:, 2]).max() <= 0.01


@given(st.integers(0, 1000))
def test_determinism(seed):
    cloud = plane_cloud(6)
    a, b = build_gpis(cloud, seed=seed), build_gpis(cloud, seed=seed)
    np.testing.assert_array_equal(a.gp.training.inputs, b.gp.training.inputs)
    np.testing.assert_array_equal(a.gp.alpha, b.gp.alpha)


@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_add_tactile_equals_rebuild(seed, m):
    rng = np.random.default_rng(seed)
    base = build_gpis(plane_cloud(6), seed=seed % 100)
    pts = rng.uniform(-0.1, 0.1, (m, 3))
    labels = rng.integers(-1, 2, m)
    new = add_tactile(base, TactileBatch(pts, labels))
    tr = base.gp.training
    ref = fit(base.kernel, GpTrainingSet(np.vstack([tr.inputs, pts]), np.concatenate([tr.targets, labels]), tr.noise_var))
    Q = rng.uniform(-0.12, 0.12, (10, 3))
    a, b = query_field(new, Q), predict(ref, Q)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-8)
    np.testing.assert_allclose(a.variance, b.variance, atol=1e-8)


@given(st.integers(0, 2**32 - 1), st.integers(1, 16))
def test_variance_at_tactile_points_drops(seed, m):
    rng = np.random.default_rng(seed)
    base = build_gpis(plane_cloud(6), seed=1)
    pts = rng.uniform(-0.15, 0.15, (m, 3))
    new = add_tactile(base, TactileBatch(pts, rng.integers(-1, 2, m)))
    assert np.all(query_field(new, pts).variance < query_field(base, pts).variance)
