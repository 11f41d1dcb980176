import math

import numpy as np
import pytest

from gravclean import DegenerateLeafError, adaptive_voxel_size, density_filter, knn_density, voxel_gate

from brute import density_brute, knn_brute, voxel_counts_brute


# ---------------------------------------------------------------------------
# adaptive voxel size
# ---------------------------------------------------------------------------

def test_voxel_size_unit_cube():
    assert adaptive_voxel_size([1, 1, 1], 1000, beta=1.0) == pytest.approx(0.1)


def test_voxel_size_linear_in_beta():
    assert adaptive_voxel_size([1, 1, 1], 1000, beta=2.0) == pytest.approx(0.2)


def test_voxel_size_planar_fallback():
    # one zero extent: h = beta * sqrt(area / n)
    h = adaptive_voxel_size([2.0, 3.0, 0.0], 100, beta=1.0)
    assert h == pytest.approx(math.sqrt(6.0 / 100))


def test_voxel_size_linear_fallback():
    h = adaptive_voxel_size([5.0, 0.0, 0.0], 10, beta=2.0)
    assert h == pytest.approx(1.0)


def test_voxel_size_coincident_returns_zero():
    assert adaptive_voxel_size([0.0, 0.0, 0.0], 7, beta=1.5) == 0.0


# ---------------------------------------------------------------------------
# voxel gate
# ---------------------------------------------------------------------------

def test_gate_removes_isolated_point(rng):
    # 10 points inside one voxel plus 1 point three voxels away
    pts = np.vstack([rng.uniform(0, 0.9, size=(10, 3)), [[3.5, 3.5, 3.5]]])
    keep = voxel_gate(pts, h=1.0, min_count=4, origin=np.zeros(3))
    assert keep[:10].all() and not keep[10]
    counts = voxel_counts_brute(pts, 1.0, np.zeros(3))
    assert np.array_equal(keep, counts >= 4)


def test_gate_vacuous_when_min_count_zero(make_cloud):
    cloud = make_cloud(50)
    assert voxel_gate(cloud.xyz, h=0.1, min_count=0).all()


def test_gate_single_voxel_all_kept(rng):
    pts = rng.uniform(0, 0.5, size=(20, 3))
    assert voxel_gate(pts, h=1.0, min_count=1, origin=np.zeros(3)).all()


def test_gate_matches_brute_counts(rng):
    pts = rng.uniform(-2, 2, size=(500, 3))
    origin = pts.min(axis=0)
    for n_v in (1, 2, 3, 5):
        keep = voxel_gate(pts, h=0.37, min_count=n_v, origin=origin)
        counts = voxel_counts_brute(pts, 0.37, origin)
        assert np.array_equal(keep, counts >= n_v)


def test_gate_monotone_in_min_count(rng):
    pts = rng.uniform(size=(300, 3))
    kept_sets = []
    for n_v in (1, 2, 4, 8):
        kept_sets.append(set(np.flatnonzero(voxel_gate(pts, 0.2, n_v)).tolist()))
    for small, big in zip(kept_sets[1:], kept_sets[:-1]):
        assert small <= big


def test_gate_translation_invariant(rng):
    pts = rng.uniform(size=(200, 3))
    origin = pts.min(axis=0)
    t = np.array([13.25, -4.75, 0.5])
    a = voxel_gate(pts, 0.15, 3, origin)
    b = voxel_gate(pts + t, 0.15, 3, origin + t)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# kNN density
# ---------------------------------------------------------------------------

def test_density_two_points():
    field = knn_density(np.array([[0.0, 0, 0], [1.0, 0, 0]]), np.array([0, 1]), k=1)
    expected = 3.0 / (4.0 * math.pi)
    assert field.rho == pytest.approx([expected, expected])
    assert np.array_equal(field.neighbor_ids, [[1], [0]])


def test_density_matches_brute_force(rng):
    pts = rng.uniform(size=(200, 3))
    ids = np.arange(200)
    field = knn_density(pts, ids, k=12, epsilon=1e-12)
    bids, bd = knn_brute(pts, ids, 12)
    assert np.array_equal(field.neighbor_ids, bids)
    assert np.array_equal(field.neighbor_dist, bd)
    brho, br_k = density_brute(pts, ids, 12, 1e-12)
    assert np.allclose(field.rho, brho, rtol=1e-12)
    assert np.array_equal(field.r_k, br_k)


def test_density_brute_equivalence_on_grid_with_ties(rng):
    # integer grid: massive distance ties exercise the (distance, id) rule
    g = np.stack(np.meshgrid(range(5), range(5), range(4), indexing="ij"), -1).reshape(-1, 3)
    pts = g.astype(float)
    ids = rng.permutation(len(pts)).astype(np.int64)
    field = knn_density(pts, ids, k=6)
    bids, bd = knn_brute(pts, ids, 6)
    assert np.array_equal(field.neighbor_ids, bids)
    assert np.array_equal(field.neighbor_dist, bd)


def test_density_coincident_points_epsilon_clamped():
    pts = np.zeros((8, 3))
    field = knn_density(pts, np.arange(8), k=7, epsilon=1e-12)
    expected = 7.0 / (4.0 / 3.0 * math.pi * 1e-36)
    assert np.all(np.isfinite(field.rho))
    assert field.rho == pytest.approx(np.full(8, expected))
    # ties at distance zero resolve by ascending id
    assert np.array_equal(field.neighbor_ids[0], np.arange(1, 8))


def test_density_k_clamped_to_n_minus_1(rng):
    pts = rng.uniform(size=(5, 3))
    field = knn_density(pts, np.arange(5), k=12)
    assert field.k_eff == 4


def test_density_requires_two_points():
    with pytest.raises(DegenerateLeafError):
        knn_density(np.array([[0.0, 0, 0]]), np.array([0]), k=3)


def test_density_translation_and_scale(rng):
    pts = rng.uniform(size=(150, 3))
    ids = np.arange(150)
    base = knn_density(pts, ids, k=8)
    shifted = knn_density(pts + [5.0, -3.0, 2.0], ids, k=8)
    assert np.allclose(shifted.rho, base.rho, rtol=1e-9)
    assert np.allclose(shifted.r_k, base.r_k, rtol=1e-9)
    for s in (0.1, 10.0):
        scaled = knn_density(pts * s, ids, k=8)
        assert np.allclose(scaled.r_k, base.r_k * s, rtol=1e-9)
        assert np.allclose(scaled.rho, base.rho / s**3, rtol=1e-9)
        assert np.array_equal(
            np.argsort(scaled.rho, kind="stable"), np.argsort(base.rho, kind="stable")
        )


# ---------------------------------------------------------------------------
# density filter
# ---------------------------------------------------------------------------

def _field_with_rho(rho):
    n = len(rho)
    from gravclean import DensityField

    return DensityField(
        ids=np.arange(n),
        rho=np.asarray(rho, dtype=float),
        r_k=np.ones(n),
        neighbor_ids=np.zeros((n, 1), dtype=np.int64),
        neighbor_dist=np.ones((n, 1)),
    )


def test_filter_q_zero_keeps_all(rng):
    field = _field_with_rho(rng.uniform(1, 2, size=40))
    assert density_filter(field, 0.0).all()


def test_filter_equal_densities_all_kept():
    field = _field_with_rho(np.full(25, 3.33))
    assert density_filter(field, 50.0).all()


def test_filter_q20_keeps_top_80_of_distinct(rng):
    rho = rng.permutation(100).astype(float) + 1.0  # distinct densities
    field = _field_with_rho(rho)
    keep = density_filter(field, 20.0)
    # sort-based oracle with the linear-interpolation quantile rule
    order = np.argsort(rho)
    expected = np.ones(100, dtype=bool)
    expected[order[:20]] = False
    assert np.array_equal(keep, expected)
    assert keep.sum() == 80


def test_filter_monotone_in_q(rng):
    field = _field_with_rho(rng.uniform(0.1, 5.0, size=200))
    prev = None
    for q in (0, 5, 20, 50, 90):
        kept = set(np.flatnonzero(density_filter(field, q)).tolist())
        if prev is not None:
            assert kept <= prev
        prev = kept


def test_filter_validates_q(rng):
    field = _field_with_rho(rng.uniform(size=10))
    with pytest.raises(ValueError):
        density_filter(field, -1.0)
    with pytest.raises(ValueError):
        density_filter(field, 101.0)
