"""Shared fixtures: small cameras, random depth maps, rendered scenes."""

from __future__ import annotations

import numpy as np
import pytest

from vnkit import CameraIntrinsics, DepthMap, synthesize_scene
from vnkit.scenes import standard_noisy_scene, standard_scene


@pytest.fixture
def cam16():
    return CameraIntrinsics(fx=16.0, fy=16.0, u0=7.5, v0=7.5)


@pytest.fixture
def kinect_like():
    return CameraIntrinsics(fx=519.0, fy=519.0, u0=325.5, v0=253.7)


def random_depth(shape, seed, lo=1.0, hi=4.0):
    rng = np.random.default_rng(seed)
    return DepthMap.from_values(rng.uniform(lo, hi, shape))


def smooth_depth(shape, seed, base=2.0):
    """Gently varying surface: ramp plus a low-amplitude sine."""
    rng = np.random.default_rng(seed)
    h, w = shape
    r = np.arange(h)[:, None] / max(h - 1, 1)
    c = np.arange(w)[None, :] / max(w - 1, 1)
    a, bb, ph = rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4), rng.uniform(0, 6)
    vals = base + a * r + bb * c + 0.02 * np.sin(6.0 * c + ph)
    return DepthMap.from_values(vals)


@pytest.fixture(scope="session")
def scene_pair():
    spec = standard_scene()
    depth, normals = synthesize_scene(spec)
    return spec, depth, normals


@pytest.fixture(scope="session")
def noisy_scene_pair():
    spec = standard_noisy_scene()
    depth, normals = synthesize_scene(spec)
    return spec, depth, normals
