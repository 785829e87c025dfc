"""Sphere construction, noise injection, and the robustness sweep."""

from __future__ import annotations

import numpy as np
import pytest

from vnkit import NoiseConfig, add_gaussian_noise, make_sphere, vn_sn_robustness


def small_config(**over):
    base = dict(
        sigma_list=(0.001, 0.01),
        n_vn_groups=400,
        n_sn_points=400,
        n_cloud_points=2000,
        knn=12,
        seed=7,
    )
    base.update(over)
    return NoiseConfig(**base)


class TestMakeSphere:
    def test_radius_exact(self):
        cloud, _ = make_sphere(500, 2.5, seed=3)
        r = np.linalg.norm(cloud.points, axis=1)
        assert np.max(np.abs(r - 2.5)) < 1e-12

    def test_normals_match_positions(self):
        cloud, normals = make_sphere(500, 1.0, seed=3)
        assert np.max(np.abs(cloud.points - normals)) < 1e-12
        assert np.max(np.abs(np.linalg.norm(normals, axis=1) - 1.0)) < 1e-12

    def test_deterministic(self):
        a, _ = make_sphere(100, 1.0, seed=5)
        b, _ = make_sphere(100, 1.0, seed=5)
        assert np.array_equal(a.points, b.points)

    def test_distinct_seeds_distinct_points(self):
        a, _ = make_sphere(100, 1.0, seed=5)
        b, _ = make_sphere(100, 1.0, seed=6)
        assert not np.array_equal(a.points, b.points)

    def test_area_uniformity_moments(self):
        # for a uniform sphere each coordinate has mean 0, E[x^2] = 1/3
        cloud, _ = make_sphere(200_000, 1.0, seed=11)
        p = cloud.points
        assert np.max(np.abs(p.mean(axis=0))) < 0.01
        assert np.max(np.abs((p * p).mean(axis=0) - 1.0 / 3.0)) < 0.01

    def test_input_validation(self):
        with pytest.raises(ValueError):
            make_sphere(3, 1.0, seed=0)
        with pytest.raises(ValueError):
            make_sphere(10, 0.0, seed=0)


class TestAddGaussianNoise:
    def test_sigma_zero_is_bitwise_identity(self):
        cloud, _ = make_sphere(100, 1.0, seed=1)
        out = add_gaussian_noise(cloud, sigma=0.0, mu=0.0, seed=9)
        assert np.array_equal(out.points, cloud.points)

    def test_deterministic(self):
        cloud, _ = make_sphere(100, 1.0, seed=1)
        a = add_gaussian_noise(cloud, 0.01, 0.0, seed=9)
        b = add_gaussian_noise(cloud, 0.01, 0.0, seed=9)
        assert np.array_equal(a.points, b.points)

    def test_noise_statistics(self):
        cloud, _ = make_sphere(100_000, 1.0, seed=1)
        out = add_gaussian_noise(cloud, sigma=0.05, mu=0.2, seed=9)
        delta = out.points - cloud.points
        assert abs(delta.mean() - 0.2) < 0.001
        assert abs(delta.std() - 0.05) < 0.001

    def test_negative_sigma_rejected(self):
        cloud, _ = make_sphere(10, 1.0, seed=1)
        with pytest.raises(ValueError):
            add_gaussian_noise(cloud, -0.1, 0.0, seed=9)

    def test_preserves_pixel_index(self):
        from vnkit import PointCloud

        idx = np.arange(20, dtype=np.int64).reshape(10, 2)
        cloud = PointCloud(
            points=np.random.default_rng(0).uniform(1, 2, (10, 3)),
            pixel_index=idx,
        )
        out = add_gaussian_noise(cloud, 0.01, 0.0, seed=2)
        assert np.array_equal(out.pixel_index, idx)


class TestNoiseConfig:
    def test_sigma_list_coerced_to_floats(self):
        cfg = small_config(sigma_list=[1, 2])
        assert cfg.sigma_list == (1.0, 2.0)

    def test_empty_sigmas_rejected(self):
        with pytest.raises(ValueError):
            small_config(sigma_list=())

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(ValueError):
            small_config(sigma_list=(0.0, 0.1))

    def test_descending_sigmas_rejected(self):
        with pytest.raises(ValueError):
            small_config(sigma_list=(0.01, 0.001))

    def test_equal_sigmas_rejected(self):
        with pytest.raises(ValueError):
            small_config(sigma_list=(0.01, 0.01))

    def test_tiny_knn_rejected(self):
        with pytest.raises(ValueError):
            small_config(knn=2)

    def test_zero_counts_rejected(self):
        with pytest.raises(ValueError):
            small_config(n_vn_groups=0)


class TestRobustnessSweep:
    def test_table_shape_and_sigma_column(self):
        cfg = small_config()
        table = vn_sn_robustness(cfg)
        assert table.shape == (2, 3)
        assert np.array_equal(table[:, 0], [0.001, 0.01])

    def test_deterministic(self):
        cfg = small_config()
        a = vn_sn_robustness(cfg)
        b = vn_sn_robustness(cfg)
        assert np.array_equal(a, b)

    def test_triplet_normals_beat_local_fits(self):
        # long arms divide the same coordinate noise by a ~1 m lever,
        # local fits by a ~0.1 m neighborhood: vn must sit well below sn
        cfg = small_config(
            sigma_list=(0.0005, 0.002, 0.008), n_vn_groups=800, n_sn_points=800
        )
        table = vn_sn_robustness(cfg)
        assert np.all(table[:, 1] < table[:, 2])

    def test_local_fit_error_grows_with_sigma(self):
        cfg = small_config(sigma_list=(0.0005, 0.002, 0.008))
        table = vn_sn_robustness(cfg)
        sn = table[:, 2]
        assert np.all(np.diff(sn) > 0.0)

    def test_small_sigma_small_angles(self):
        cfg = small_config(sigma_list=(1e-7,))
        table = vn_sn_robustness(cfg)
        assert table[0, 1] < 1e-3
        assert table[0, 2] < 1e-1

    def test_linear_regime_scaling(self):
        # perturbation angles are ~ sigma/lever while sigma stays tiny,
        # so a 10x sigma should move vn error by roughly 10x
        cfg = small_config(sigma_list=(1e-6, 1e-5), n_vn_groups=1500)
        table = vn_sn_robustness(cfg)
        ratio = table[1, 1] / table[0, 1]
        assert 8.0 < ratio < 12.0
