"""Synthetic test scenes rendered by per-pixel ray casting.

A scene is a declarative list of surfaces (infinite or disk-bounded
planes, spheres).  Every pixel casts the ray r = ((u-u0)/fx, (v-v0)/fy, 1)
and keeps the nearest positive hit parameter t; because the ray's z
component is 1, t IS the pixel's depth.  Hits outside [d_min, d_max]
are masked invalid.  Ground-truth normals are the analytic surface
normals of the winning surface, flipped toward the camera.

Optional Gaussian depth noise (Philox key (seed, 5)) perturbs the
rendered depth and is clamped back into [d_min, d_max], so the valid
mask never depends on the noise draw; ground-truth normals always
describe the noise-free geometry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import FileFormatError
from .geometry import CameraIntrinsics, DepthMap
from .normals import NormalMap

__all__ = [
    "PlaneSurface",
    "SphereSurface",
    "SceneSpec",
    "synthesize_scene",
    "standard_scene",
    "standard_noisy_scene",
]

_DOMAIN_SCENE_NOISE = 5


@dataclass(frozen=True)
class PlaneSurface:
    """Plane through ``point`` with the given normal.

    ``extent`` (meters, measured from ``point`` along the plane) bounds
    the surface to a disk; None means infinite.
    """

    point: tuple
    normal: tuple
    extent: float | None = None

    def __post_init__(self):
        p = tuple(float(x) for x in self.point)
        n = tuple(float(x) for x in self.normal)
        if len(p) != 3 or len(n) != 3:
            raise ValueError("point and normal must be 3-vectors")
        norm = float(np.linalg.norm(n))
        if norm == 0.0:
            raise ValueError("plane normal must be nonzero")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "normal", tuple(x / norm for x in n))
        if self.extent is not None and not self.extent > 0.0:
            raise ValueError("extent must be positive or None")


@dataclass(frozen=True)
class SphereSurface:
    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(x) for x in self.center)
        if len(c) != 3:
            raise ValueError("center must be a 3-vector")
        object.__setattr__(self, "center", c)
        if not self.radius > 0.0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    intrinsics: CameraIntrinsics
    planes: tuple = ()
    spheres: tuple = ()
    d_min: float = 0.5
    d_max: float = 10.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if not 0.0 < self.d_min < self.d_max:
            raise ValueError("need 0 < d_min < d_max")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be nonnegative")
        object.__setattr__(self, "planes", tuple(self.planes))
        object.__setattr__(self, "spheres", tuple(self.spheres))

    def to_json(self) -> str:
        obj = {
            "width": self.width,
            "height": self.height,
            "intrinsics": {
                "fx": self.intrinsics.fx,
                "fy": self.intrinsics.fy,
                "u0": self.intrinsics.u0,
                "v0": self.intrinsics.v0,
                "depth_scale": self.intrinsics.depth_scale,
            },
            "planes": [
                {
                    "point": list(p.point),
                    "normal": list(p.normal),
                    "extent": p.extent,
                }
                for p in self.planes
            ],
            "spheres": [
                {"center": list(s.center), "radius": s.radius}
                for s in self.spheres
            ],
            "d_min": self.d_min,
            "d_max": self.d_max,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }
        return json.dumps(obj, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise FileFormatError(f"scene spec is not valid JSON: {e}") from e
        known = {
            "width",
            "height",
            "intrinsics",
            "planes",
            "spheres",
            "d_min",
            "d_max",
            "noise_sigma",
            "seed",
        }
        unknown = set(obj) - known
        if unknown:
            raise FileFormatError(f"unknown scene keys: {sorted(unknown)}")
        try:
            k = CameraIntrinsics(**obj["intrinsics"])
            planes = tuple(
                PlaneSurface(
                    point=tuple(p["point"]),
                    normal=tuple(p["normal"]),
                    extent=p.get("extent"),
                )
                for p in obj.get("planes", ())
            )
            spheres = tuple(
                SphereSurface(center=tuple(s["center"]), radius=s["radius"])
                for s in obj.get("spheres", ())
            )
            return cls(
                width=obj["width"],
                height=obj["height"],
                intrinsics=k,
                planes=planes,
                spheres=spheres,
                d_min=obj.get("d_min", 0.5),
                d_max=obj.get("d_max", 10.0),
                noise_sigma=obj.get("noise_sigma", 0.0),
                seed=obj.get("seed", 0),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FileFormatError(f"bad scene spec: {e}") from e


def synthesize_scene(spec: SceneSpec) -> tuple[DepthMap, NormalMap]:
    """Render depth and analytic ground-truth normals for a scene.

    Pixels whose ray misses every surface, or whose nearest hit falls
    outside [d_min, d_max], are masked invalid in both outputs.
    """
    k = spec.intrinsics
    rays = k.pixel_rays(spec.height, spec.width)
    best_t = np.full((spec.height, spec.width), np.inf)
    best_n = np.zeros((spec.height, spec.width, 3))

    def consider(t, normal):
        hit = np.isfinite(t) & (t > 0.0) & (t < best_t)
        best_t[hit] = t[hit]
        best_n[hit] = normal[hit]

    for plane in spec.planes:
        n = np.array(plane.normal)
        p0 = np.array(plane.point)
        denom = rays @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 1e-12, (p0 @ n) / denom, np.inf)
        if plane.extent is not None:
            hit_pt = t[:, :, None] * rays
            in_disk = np.linalg.norm(hit_pt - p0, axis=2) <= plane.extent
            t = np.where(in_disk, t, np.inf)
        normal = np.broadcast_to(n, rays.shape)
        consider(t, normal)

    for sphere in spec.spheres:
        c = np.array(sphere.center)
        a = np.einsum("hwi,hwi->hw", rays, rays)
        b = -2.0 * (rays @ c)
        cc = float(c @ c) - sphere.radius**2
        disc = b * b - 4.0 * a * cc
        with np.errstate(invalid="ignore"):
            sq = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
            t1 = (-b - sq) / (2.0 * a)
            t2 = (-b + sq) / (2.0 * a)
            t = np.where(t1 > 0.0, t1, t2)
            t = np.where(np.isnan(t) | (t <= 0.0), np.inf, t)
        hit_pt = np.where(np.isfinite(t), t, 0.0)[:, :, None] * rays
        normal = (hit_pt - c) / sphere.radius
        consider(t, normal)

    mask = np.isfinite(best_t) & (best_t >= spec.d_min) & (best_t <= spec.d_max)
    depth_values = np.where(mask, best_t, 0.0)

    if spec.noise_sigma > 0.0:
        rng = np.random.Generator(
            np.random.Philox(
                key=np.array([spec.seed, _DOMAIN_SCENE_NOISE], dtype=np.uint64)
            )
        )
        noise = rng.normal(0.0, spec.noise_sigma, size=depth_values.shape)
        depth_values = np.where(
            mask, np.clip(depth_values + noise, spec.d_min, spec.d_max), 0.0
        )

    # Orient toward the camera: the surface point is t*r, so flip where
    # the analytic normal points away from the origin.  Misses carry
    # t = inf, so zero them before the product.
    pts = np.where(mask, best_t, 0.0)[:, :, None] * rays
    flip = np.einsum("hwi,hwi->hw", best_n, pts) > 0.0
    best_n = np.where(flip[:, :, None], -best_n, best_n)
    best_n[~mask] = 0.0

    return (
        DepthMap(depth_values, mask),
        NormalMap(normals=best_n, valid=mask),
    )


def _standard_spec(noise_sigma: float, seed: int) -> SceneSpec:
    k = CameraIntrinsics(fx=64.0, fy=64.0, u0=31.5, v0=31.5)
    return SceneSpec(
        width=64,
        height=64,
        intrinsics=k,
        planes=(
            PlaneSurface(point=(-0.4, 0.0, 2.6), normal=(0.45, 0.12, -1.0)),
            PlaneSurface(point=(0.5, 0.15, 2.4), normal=(-0.35, -0.2, -1.0)),
        ),
        spheres=(SphereSurface(center=(0.05, -0.12, 2.35), radius=0.42),),
        d_min=0.5,
        d_max=8.0,
        noise_sigma=noise_sigma,
        seed=seed,
    )


def standard_scene() -> SceneSpec:
    """The 64x64 two-slanted-planes-plus-sphere-cap reference scene.

    Every pixel hits a surface (the planes are infinite), depths span
    roughly 1.7 to 3.2 m, and the back-projected extent comfortably
    exceeds the 0.6 m long-range floor, so triplet sampling is rich.
    """
    return _standard_spec(noise_sigma=0.0, seed=0)


def standard_noisy_scene(sigma: float = 0.005, seed: int = 7) -> SceneSpec:
    """Standard scene plus Gaussian depth noise (default 5 mm)."""
    return _standard_spec(noise_sigma=sigma, seed=seed)
