"""Ray-cast scene synthesis against closed-form geometry."""

from __future__ import annotations

import numpy as np
import pytest

from vnkit import (
    CameraIntrinsics,
    FileFormatError,
    PlaneSurface,
    SceneSpec,
    SphereSurface,
    backproject_map,
    standard_noisy_scene,
    standard_scene,
    synthesize_scene,
)


def cam(fx=32.0, fy=32.0, u0=15.5, v0=15.5):
    return CameraIntrinsics(fx=fx, fy=fy, u0=u0, v0=v0)


class TestSurfaceValidation:
    def test_plane_normal_normalized(self):
        p = PlaneSurface(point=(0, 0, 2), normal=(0, 0, -2))
        assert p.normal == (0.0, 0.0, -1.0)

    def test_zero_normal_rejected(self):
        with pytest.raises(ValueError):
            PlaneSurface(point=(0, 0, 2), normal=(0, 0, 0))

    def test_bad_extent_rejected(self):
        with pytest.raises(ValueError):
            PlaneSurface(point=(0, 0, 2), normal=(0, 0, 1), extent=-1.0)

    def test_sphere_radius_positive(self):
        with pytest.raises(ValueError):
            SphereSurface(center=(0, 0, 3), radius=0.0)

    def test_spec_depth_range_ordering(self):
        with pytest.raises(ValueError):
            SceneSpec(width=8, height=8, intrinsics=cam(), d_min=2.0, d_max=1.0)

    def test_spec_negative_noise_rejected(self):
        with pytest.raises(ValueError):
            SceneSpec(width=8, height=8, intrinsics=cam(), noise_sigma=-0.1)


class TestPlaneRendering:
    def test_frontal_plane_constant_depth(self):
        spec = SceneSpec(
            width=32,
            height=32,
            intrinsics=cam(),
            planes=(PlaneSurface(point=(0, 0, 2), normal=(0, 0, -1)),),
        )
        depth, nm = synthesize_scene(spec)
        assert np.all(depth.mask)
        assert np.max(np.abs(depth.values - 2.0)) < 1e-12
        assert np.max(np.abs(nm.normals - [0.0, 0.0, -1.0])) < 1e-12

    def test_slanted_plane_closed_form(self):
        # plane x + z = 3: ray hit t*(rx, ry, 1) satisfies t = 3/(rx+1)
        k = cam()
        spec = SceneSpec(
            width=32,
            height=32,
            intrinsics=k,
            planes=(PlaneSurface(point=(0, 0, 3), normal=(1, 0, 1)),),
        )
        depth, nm = synthesize_scene(spec)
        rays = k.pixel_rays(32, 32)
        want = 3.0 / (rays[:, :, 0] + 1.0)
        assert np.all(depth.mask)
        assert np.max(np.abs(depth.values - want)) < 1e-12
        root_half = 1.0 / np.sqrt(2.0)
        assert np.max(np.abs(nm.normals - [-root_half, 0.0, -root_half])) < 1e-12

    def test_normals_face_camera(self):
        # same plane declared with the opposite normal must render
        # identically: orientation is resolved toward the origin
        a = SceneSpec(
            width=16,
            height=16,
            intrinsics=cam(),
            planes=(PlaneSurface(point=(0, 0, 2), normal=(0, 0, 1)),),
        )
        b = SceneSpec(
            width=16,
            height=16,
            intrinsics=cam(),
            planes=(PlaneSurface(point=(0, 0, 2), normal=(0, 0, -1)),),
        )
        da, na = synthesize_scene(a)
        db, nb = synthesize_scene(b)
        assert np.array_equal(da.values, db.values)
        assert np.array_equal(na.normals, nb.normals)

    def test_disk_extent_bounds_plane(self):
        spec = SceneSpec(
            width=32,
            height=32,
            intrinsics=cam(),
            planes=(
                PlaneSurface(point=(0, 0, 2), normal=(0, 0, -1), extent=0.3),
            ),
        )
        depth, _ = synthesize_scene(spec)
        assert depth.mask[15, 15]
        assert not depth.mask[0, 0]
        cloud = backproject_map(depth, cam())
        radial = np.linalg.norm(cloud.points[:, :2], axis=1)
        assert np.max(radial) <= 0.3 + 1e-9

    def test_nearest_surface_wins(self):
        spec = SceneSpec(
            width=16,
            height=16,
            intrinsics=cam(),
            planes=(
                PlaneSurface(point=(0, 0, 3), normal=(0, 0, -1)),
                PlaneSurface(point=(0, 0, 2), normal=(0, 0, -1)),
            ),
        )
        depth, _ = synthesize_scene(spec)
        assert np.max(np.abs(depth.values - 2.0)) < 1e-12


class TestSphereRendering:
    def test_center_pixel_depth(self):
        # sphere on the optical axis: central ray hits at z = cz - R
        spec = SceneSpec(
            width=33,
            height=33,
            intrinsics=cam(u0=16.0, v0=16.0),
            spheres=(SphereSurface(center=(0, 0, 3), radius=0.5),),
        )
        depth, nm = synthesize_scene(spec)
        assert abs(depth.values[16, 16] - 2.5) < 1e-12
        assert np.max(np.abs(nm.normals[16, 16] - [0, 0, -1])) < 1e-12

    def test_miss_pixels_invalid(self):
        spec = SceneSpec(
            width=33,
            height=33,
            intrinsics=cam(u0=16.0, v0=16.0),
            spheres=(SphereSurface(center=(0, 0, 3), radius=0.2),),
        )
        depth, nm = synthesize_scene(spec)
        assert depth.mask[16, 16]
        assert not depth.mask[0, 0]
        assert np.all(nm.normals[~nm.valid] == 0.0)

    def test_hit_points_lie_on_sphere(self):
        spec = SceneSpec(
            width=33,
            height=33,
            intrinsics=cam(u0=16.0, v0=16.0),
            spheres=(SphereSurface(center=(0.1, -0.2, 3), radius=0.5),),
        )
        depth, nm = synthesize_scene(spec)
        cloud = backproject_map(depth, cam(u0=16.0, v0=16.0))
        r = np.linalg.norm(cloud.points - [0.1, -0.2, 3.0], axis=1)
        assert np.max(np.abs(r - 0.5)) < 1e-9
        # analytic normal is the radial direction at the hit point
        want = (cloud.points - [0.1, -0.2, 3.0]) / 0.5
        got = nm.normals[nm.valid]
        assert np.max(np.abs(got - want)) < 1e-9


class TestDepthWindowAndNoise:
    def test_depth_window_masks_out_of_range(self):
        spec = SceneSpec(
            width=8,
            height=8,
            intrinsics=cam(u0=3.5, v0=3.5),
            planes=(PlaneSurface(point=(0, 0, 12), normal=(0, 0, -1)),),
            d_max=10.0,
        )
        depth, _ = synthesize_scene(spec)
        assert not np.any(depth.mask)
        assert np.all(depth.values == 0.0)

    def test_empty_scene_all_invalid(self):
        depth, nm = synthesize_scene(
            SceneSpec(width=8, height=8, intrinsics=cam(u0=3.5, v0=3.5))
        )
        assert not np.any(depth.mask)
        assert not np.any(nm.valid)

    def test_noise_leaves_mask_and_normals_alone(self):
        clean = standard_scene()
        noisy = standard_noisy_scene(sigma=0.02, seed=3)
        d0, n0 = synthesize_scene(clean)
        d1, n1 = synthesize_scene(noisy)
        assert np.array_equal(d0.mask, d1.mask)
        assert np.array_equal(n0.normals, n1.normals)
        assert not np.array_equal(d0.values, d1.values)

    def test_noise_statistics_and_clamp(self):
        spec = SceneSpec(
            width=64,
            height=64,
            intrinsics=cam(u0=31.5, v0=31.5),
            planes=(PlaneSurface(point=(0, 0, 2), normal=(0, 0, -1)),),
            noise_sigma=0.01,
            seed=5,
        )
        depth, _ = synthesize_scene(spec)
        delta = depth.values - 2.0
        assert abs(delta.mean()) < 0.005
        assert abs(delta.std() - 0.01) < 0.005
        assert np.all(depth.values >= spec.d_min)
        assert np.all(depth.values <= spec.d_max)

    def test_noise_deterministic_in_seed(self):
        a, _ = synthesize_scene(standard_noisy_scene(seed=9))
        b, _ = synthesize_scene(standard_noisy_scene(seed=9))
        c, _ = synthesize_scene(standard_noisy_scene(seed=10))
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)


class TestSpecJson:
    def test_round_trip(self):
        spec = standard_noisy_scene(sigma=0.004, seed=12)
        again = SceneSpec.from_json(spec.to_json())
        # plane normals get renormalized on load, which can move the
        # last ulp; everything else must survive exactly, and a second
        # hop must be a fixed point
        assert again.width == spec.width and again.height == spec.height
        assert again.intrinsics == spec.intrinsics
        assert again.spheres == spec.spheres
        assert (again.d_min, again.d_max) == (spec.d_min, spec.d_max)
        assert (again.noise_sigma, again.seed) == (spec.noise_sigma, spec.seed)
        for pa, pb in zip(again.planes, spec.planes):
            assert pa.point == pb.point and pa.extent == pb.extent
            assert np.max(np.abs(np.subtract(pa.normal, pb.normal))) < 1e-15
        assert SceneSpec.from_json(again.to_json()) == again

    def test_unknown_key_rejected(self):
        with pytest.raises(FileFormatError):
            SceneSpec.from_json('{"width": 8, "height": 8, "bogus": 1}')

    def test_invalid_json_rejected(self):
        with pytest.raises(FileFormatError):
            SceneSpec.from_json("{not json")

    def test_missing_intrinsics_rejected(self):
        with pytest.raises(FileFormatError):
            SceneSpec.from_json('{"width": 8, "height": 8}')


class TestStandardScene:
    def test_fully_valid_and_in_range(self, scene_pair):
        _, depth, nm = scene_pair
        assert depth.values.shape == (64, 64)
        assert np.all(depth.mask)
        assert np.all(nm.valid)
        assert depth.values.min() > 1.5
        assert depth.values.max() < 3.5

    def test_contains_all_three_surfaces(self, scene_pair):
        # the sphere cap plus both planes should each own pixels:
        # count distinct normals (plane normals are constant)
        _, _, nm = scene_pair
        flat = nm.normals.reshape(-1, 3)
        uniq = np.unique(np.round(flat, 9), axis=0)
        assert uniq.shape[0] > 3  # two planes + many sphere directions
