"""Per-pixel surface normals from local plane fits.

Each pixel's normal is the smallest-eigenvalue eigenvector of the
centered covariance of the back-projected points in its
(2i+1) x (2i+1) pixel patch, flipped to face the camera.  Patches are
clipped at image boundaries, so a fully valid map yields normals at
every pixel, borders included.

Covariance is accumulated with the patch mean subtracted first.  The
obvious sum-of-products-minus-mean shortcut (and any summed-area-table
variant) cancels catastrophically on exactly planar patches, inflating
the smallest eigenvalue by ~1e-12; centering keeps it near 1e-30.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError, EmptySampleError, ShapeMismatchError
from .geometry import CameraIntrinsics, DepthMap, PointCloud, backproject_grid
from .reduction import chunked_mean

__all__ = [
    "NormalMap",
    "patch_normal",
    "estimate_normal_map",
    "patch_size_sensitivity",
]

# A plane-like patch must dominate its thickness: the middle eigenvalue
# has to exceed the smallest by this factor, else the fit is degenerate.
EIG_RATIO_MIN = 1.5


@dataclass(frozen=True)
class NormalMap:
    """H x W grid of unit normals with a validity mask.

    Valid entries are unit vectors oriented toward the camera
    (dot(normal, -P) >= 0 for the originating surface point P); invalid
    entries are zero-filled.
    """

    normals: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        normals = np.asarray(self.normals, dtype=np.float64)
        valid = np.asarray(self.valid)
        if normals.ndim != 3 or normals.shape[2] != 3:
            raise ShapeMismatchError(
                f"normals must be (H, W, 3), got {normals.shape}"
            )
        if valid.shape != normals.shape[:2] or valid.dtype != np.bool_:
            raise ShapeMismatchError("valid must be a boolean (H, W) mask")
        normals = np.array(normals, copy=True)
        norms = np.linalg.norm(normals[valid], axis=-1)
        if norms.size and np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("valid normals must be unit length")
        normals[~valid] = 0.0
        normals.setflags(write=False)
        valid = np.array(valid, dtype=np.bool_, copy=True)
        valid.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "valid", valid)

    @property
    def height(self) -> int:
        return self.normals.shape[0]

    @property
    def width(self) -> int:
        return self.normals.shape[1]


def _fit_patch(points: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Plane-fit one gathered patch; returns (normal, lam_min, lam_mid)."""
    mean = points.mean(axis=0)
    centered = points - mean
    cov = centered.T @ centered / points.shape[0]
    lam, vec = np.linalg.eigh(cov)
    normal = vec[:, 0]
    if float(np.dot(normal, mean)) > 0.0:
        normal = -normal
    return normal, float(lam[0]), float(lam[1])


def patch_normal(
    cloud: PointCloud, row: int, col: int, half_size: int
) -> np.ndarray:
    """Normal of the plane fitted to one pixel's patch of a cloud.

    Parameters
    ----------
    cloud
        Grid-indexed cloud (``pixel_index`` required); only points whose
        source pixel lies within ``half_size`` of (row, col) in both
        axes participate, so boundary patches shrink naturally.

    Returns
    -------
    numpy.ndarray
        Unit normal, oriented toward the camera (against the patch
        centroid).

    Raises
    ------
    DegenerateFitError
        Fewer than 3 points in the patch, or the two smallest
        covariance eigenvalues are too close to tell a plane from a
        line (ratio <= 1.5).
    """
    if cloud.pixel_index is None:
        raise ValueError("patch_normal needs a grid-indexed cloud")
    if half_size < 1:
        raise ValueError("half_size must be >= 1")
    rows = cloud.pixel_index[:, 0]
    cols = cloud.pixel_index[:, 1]
    sel = (np.abs(rows - row) <= half_size) & (np.abs(cols - col) <= half_size)
    points = cloud.points[sel]
    if points.shape[0] < 3:
        raise DegenerateFitError(
            f"patch at ({row}, {col}) has {points.shape[0]} valid points"
        )
    normal, lam_min, lam_mid = _fit_patch(points)
    if not lam_mid > EIG_RATIO_MIN * lam_min:
        raise DegenerateFitError(
            "patch covariance is line-like "
            f"(lam_mid={lam_mid:.3e}, lam_min={lam_min:.3e})"
        )
    return normal


def estimate_normal_map(
    depth: DepthMap, k: CameraIntrinsics, half_size: int
) -> NormalMap:
    """Plane-fit normals at every pixel with a usable patch.

    Equivalent to running :func:`patch_normal` per pixel (degenerate
    fits become invalid entries instead of errors) but vectorized: patch
    means and centered covariances are accumulated by looping over the
    (2i+1)^2 window offsets, then all 3x3 eigenproblems are solved in
    one batched call.
    """
    if half_size < 1:
        raise ValueError("half_size must be >= 1")
    h, w = depth.height, depth.width
    pts = backproject_grid(depth, k)
    mask = depth.mask.astype(np.float64)
    i = half_size
    pad_pts = np.pad(pts, ((i, i), (i, i), (0, 0)))
    pad_mask = np.pad(mask, i)

    offsets = [(dy, dx) for dy in range(-i, i + 1) for dx in range(-i, i + 1)]

    def window(arr, dy, dx):
        return arr[i + dy : i + dy + h, i + dx : i + dx + w]

    count = np.zeros((h, w))
    sums = np.zeros((h, w, 3))
    for dy, dx in offsets:
        count += window(pad_mask, dy, dx)
        sums += window(pad_pts, dy, dx)
    enough = count >= 3
    safe_count = np.where(count > 0, count, 1.0)
    mean = sums / safe_count[:, :, None]

    cov = np.zeros((h, w, 3, 3))
    for dy, dx in offsets:
        mw = window(pad_mask, dy, dx)
        d = window(pad_pts, dy, dx) - mean
        for a in range(3):
            for b in range(a, 3):
                cov[:, :, a, b] += mw * d[:, :, a] * d[:, :, b]
    for a in range(3):
        for b in range(a + 1, 3):
            cov[:, :, b, a] = cov[:, :, a, b]
    cov /= safe_count[:, :, None, None]
    # Identity placeholder keeps eigh happy on starved patches.
    cov[~enough] = np.eye(3)

    lam, vec = np.linalg.eigh(cov)
    normals = vec[:, :, :, 0]
    valid = enough & (lam[:, :, 1] > EIG_RATIO_MIN * lam[:, :, 0])
    flip = np.einsum("hwi,hwi->hw", normals, mean) > 0.0
    normals = np.where(flip[:, :, None], -normals, normals)
    normals[~valid] = 0.0
    return NormalMap(normals=normals, valid=valid)


def patch_size_sensitivity(
    depth: DepthMap, k: CameraIntrinsics, sizes
) -> np.ndarray:
    """Mean angular difference between normal maps at different patch sizes.

    Entry (a, b) is the mean angle in degrees between the size-a and
    size-b normals over pixels valid under both; the matrix is symmetric
    with a zero diagonal.

    Raises
    ------
    EmptySampleError
        Some size pair shares no valid pixel.
    """
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2:
        raise ValueError("need at least 2 patch sizes")
    maps = [estimate_normal_map(depth, k, s) for s in sizes]
    n = len(sizes)
    out = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            common = maps[a].valid & maps[b].valid
            if not np.any(common):
                raise EmptySampleError(
                    f"sizes {sizes[a]} and {sizes[b]} share no valid pixel"
                )
            dots = np.einsum(
                "ij,ij->i",
                maps[a].normals[common],
                maps[b].normals[common],
            )
            ang = np.degrees(np.arccos(np.clip(dots, -1.0, 1.0)))
            out[a, b] = out[b, a] = chunked_mean(ang)
    return out
