"""Pinhole camera geometry: back-projection and triangle normals.

Conventions
-----------
The camera frame doubles as the world frame.  Axes: +x right, +y down,
+z into the scene; the optical center sits at the origin.  A pixel at
row ``v``, column ``u`` (integer coordinates are pixel centers) with
metric depth ``d`` back-projects to::

    x = d * (u - u0) / fx
    y = d * (v - v0) / fy
    z = d

Depth means the z-coordinate, not ray length.  All depths are float64
meters inside the library; integer storage formats are converted at the
I/O boundary using :attr:`CameraIntrinsics.depth_scale`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateTriangleError,
    InvalidDepthError,
    ShapeMismatchError,
)

__all__ = [
    "EPS_DEGENERATE",
    "CameraIntrinsics",
    "DepthMap",
    "PointCloud",
    "backproject_pixel",
    "backproject_map",
    "backproject_grid",
    "triangle_normal",
    "triangle_normals",
    "angle_deg",
    "angles_deg",
]

# Cross products whose norm (m^2) falls at or below this are treated as
# degenerate instead of being normalized; the same guard protects angle
# computations against near-zero direction vectors (there in meters).
EPS_DEGENERATE = 1e-8


def _require_finite_positive(name: str, value: float) -> None:
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be finite and positive, got {value!r}")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters (pixels) plus meters-per-unit depth scale.

    ``depth_scale`` only matters when reading or writing integer depth
    formats; geometry code always sees meters.
    """

    fx: float
    fy: float
    u0: float
    v0: float
    depth_scale: float = 1.0

    def __post_init__(self):
        _require_finite_positive("fx", self.fx)
        _require_finite_positive("fy", self.fy)
        _require_finite_positive("depth_scale", self.depth_scale)
        if not (np.isfinite(self.u0) and np.isfinite(self.v0)):
            raise ValueError("principal point must be finite")

    def pixel_rays(self, height: int, width: int) -> np.ndarray:
        """Unit-depth rays for every pixel of an image.

        Returns
        -------
        numpy.ndarray
            ``(height, width, 3)`` float64 array with
            ``rays[v, u] = ((u - u0)/fx, (v - v0)/fy, 1)``; multiplying a
            ray by the pixel's depth gives the back-projected point.
        """
        if height <= 0 or width <= 0:
            raise ValueError("image dimensions must be positive")
        u = np.arange(width, dtype=np.float64)
        v = np.arange(height, dtype=np.float64)
        rays = np.empty((height, width, 3), dtype=np.float64)
        rays[:, :, 0] = (u[None, :] - self.u0) / self.fx
        rays[:, :, 1] = (v[:, None] - self.v0) / self.fy
        rays[:, :, 2] = 1.0
        return rays


def _as_readonly(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DepthMap:
    """A 2-D grid of metric depths plus a validity mask.

    Invalid pixels (sensor dropouts, out-of-range hits) carry no
    meaning: their stored value is forced to 0 and every consumer in the
    package ignores them.  Valid pixels must be finite and strictly
    positive.  Both arrays are copied and frozen at construction.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        mask = np.asarray(self.mask)
        if values.ndim != 2:
            raise ShapeMismatchError(
                f"depth values must be 2-D, got shape {values.shape}"
            )
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ShapeMismatchError("depth map must have positive dimensions")
        if mask.shape != values.shape:
            raise ShapeMismatchError(
                f"mask shape {mask.shape} != values shape {values.shape}"
            )
        if mask.dtype != np.bool_:
            raise ShapeMismatchError("mask must be boolean")
        values = np.array(values, dtype=np.float64, copy=True)
        valid = values[mask]
        if valid.size and not (
            np.all(np.isfinite(valid)) and np.all(valid > 0.0)
        ):
            raise InvalidDepthError(
                "valid depths must be finite and strictly positive"
            )
        values[~mask] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", _as_readonly(mask, np.bool_))

    @classmethod
    def from_values(cls, values, mask=None) -> "DepthMap":
        """Build a map, inferring the mask as finite-and-positive."""
        values = np.asarray(values, dtype=np.float64)
        if mask is None:
            mask = np.isfinite(values) & (values > 0.0)
        return cls(values, np.asarray(mask, dtype=bool))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def n_valid(self) -> int:
        return int(np.count_nonzero(self.mask))


@dataclass(frozen=True)
class PointCloud:
    """Flat list of 3-D points, optionally remembering source pixels.

    ``pixel_index`` rows are ``(row, col)`` into the originating depth
    map, in the same order as ``points``; ``None`` for clouds that never
    lived on a grid.
    """

    points: np.ndarray
    pixel_index: np.ndarray | None = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ShapeMismatchError(
                f"points must be (N, 3), got shape {points.shape}"
            )
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", _as_readonly(points, np.float64))
        if self.pixel_index is not None:
            index = np.asarray(self.pixel_index)
            if index.shape != (points.shape[0], 2):
                raise ShapeMismatchError(
                    "pixel_index must be (N, 2) matching points"
                )
            object.__setattr__(
                self, "pixel_index", _as_readonly(index, np.int64)
            )

    def __len__(self) -> int:
        return self.points.shape[0]


def backproject_pixel(
    u: float, v: float, depth: float, intrinsics: CameraIntrinsics
) -> np.ndarray:
    """Back-project one (possibly fractional) pixel coordinate.

    Parameters
    ----------
    u, v
        Column and row image coordinates.
    depth
        Metric depth; must be finite and strictly positive.

    Returns
    -------
    numpy.ndarray
        ``(3,)`` float64 camera-frame point.
    """
    if not np.isfinite(depth) or depth <= 0.0:
        raise InvalidDepthError(f"depth must be positive, got {depth!r}")
    return np.array(
        [
            depth * (u - intrinsics.u0) / intrinsics.fx,
            depth * (v - intrinsics.v0) / intrinsics.fy,
            depth,
        ],
        dtype=np.float64,
    )


def backproject_grid(
    depth: DepthMap, intrinsics: CameraIntrinsics
) -> np.ndarray:
    """Back-project a whole map, keeping the grid layout.

    Returns an ``(H, W, 3)`` float64 array; rows at invalid pixels are
    exactly zero (their stored depth is zero), so consumers must gate on
    ``depth.mask``.
    """
    rays = intrinsics.pixel_rays(depth.height, depth.width)
    return rays * depth.values[:, :, None]


def backproject_map(
    depth: DepthMap, intrinsics: CameraIntrinsics
) -> PointCloud:
    """Back-project the valid pixels of a map into a flat cloud.

    Points appear in row-major pixel order; ``pixel_index`` records the
    originating ``(row, col)`` of each. The ordering is load-bearing for
    reproducible sampling, so it is part of the contract.
    """
    grid = backproject_grid(depth, intrinsics)
    rows, cols = np.nonzero(depth.mask)
    return PointCloud(
        points=grid[rows, cols],
        pixel_index=np.stack([rows, cols], axis=1),
    )


def triangle_normals(
    pa: np.ndarray, pb: np.ndarray, pc: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized plane normals for stacked point triplets.

    Parameters
    ----------
    pa, pb, pc
        ``(N, 3)`` arrays of triangle vertices.

    Returns
    -------
    normals : numpy.ndarray
        ``(N, 3)`` unit normals ``cross(pb - pa, pc - pa)`` normalized;
        rows flagged degenerate are zero-filled, never normalized.
    degenerate : numpy.ndarray
        ``(N,)`` boolean; True where the cross-product norm is at or
        below :data:`EPS_DEGENERATE`.
    """
    pa = np.asarray(pa, dtype=np.float64)
    pb = np.asarray(pb, dtype=np.float64)
    pc = np.asarray(pc, dtype=np.float64)
    cross = np.cross(pb - pa, pc - pa)
    norm = np.linalg.norm(cross, axis=-1)
    degenerate = norm <= EPS_DEGENERATE
    safe = np.where(degenerate, 1.0, norm)
    normals = cross / safe[..., None]
    normals[degenerate] = 0.0
    return normals, degenerate


def triangle_normal(pa, pb, pc) -> np.ndarray:
    """Unit normal of the plane through three points.

    The direction follows the right-hand rule on
    ``cross(pb - pa, pc - pa)``; swapping two vertices flips the sign.

    Raises
    ------
    DegenerateTriangleError
        If the cross-product norm is at or below
        :data:`EPS_DEGENERATE` (near-colinear or near-coincident
        points).  Degenerate triangles are rejected, never silently
        normalized.
    """
    normals, degenerate = triangle_normals(
        np.asarray(pa, dtype=np.float64)[None, :],
        np.asarray(pb, dtype=np.float64)[None, :],
        np.asarray(pc, dtype=np.float64)[None, :],
    )
    if degenerate[0]:
        raise DegenerateTriangleError(
            "triangle is degenerate: cross-product norm <= "
            f"{EPS_DEGENERATE}"
        )
    return normals[0]


def angles_deg(va: np.ndarray, vb: np.ndarray) -> np.ndarray:
    """Angles in degrees between stacked vector pairs.

    Rows where either vector has norm at or below
    :data:`EPS_DEGENERATE` come back as NaN; scalar callers turn that
    into an error.  Cosines are clipped to [-1, 1] before ``arccos``.
    """
    va = np.asarray(va, dtype=np.float64)
    vb = np.asarray(vb, dtype=np.float64)
    na = np.linalg.norm(va, axis=-1)
    nb = np.linalg.norm(vb, axis=-1)
    bad = (na <= EPS_DEGENERATE) | (nb <= EPS_DEGENERATE)
    denom = np.where(bad, 1.0, na * nb)
    cos = np.clip(np.einsum("...i,...i->...", va, vb) / denom, -1.0, 1.0)
    out = np.degrees(np.arccos(cos))
    out = np.where(bad, np.nan, out)
    return out


def angle_deg(va, vb) -> float:
    """Angle in degrees between two vectors, in [0, 180].

    Raises
    ------
    ValueError
        If either vector's norm is at or below :data:`EPS_DEGENERATE`.
    """
    out = angles_deg(
        np.asarray(va, dtype=np.float64)[None, :],
        np.asarray(vb, dtype=np.float64)[None, :],
    )[0]
    if np.isnan(out):
        raise ValueError("angle undefined: vector norm <= eps_degenerate")
    return float(out)
