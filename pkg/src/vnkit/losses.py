"""Depth-supervision losses and the analytic triplet-normal gradient.

The central loss compares, between a predicted and a ground-truth depth
map, the unit normals of planes spanned by sampled pixel triplets: the
per-triplet residual is the L1 distance between the two normals, and
the value is the mean over the hardest ``ohem_keep`` fraction.

Gradient outline (pixels enter points linearly)
-----------------------------------------------
With ray r = ((u-u0)/fx, (v-v0)/fy, 1), the point is P = d*r, so for a
triplet (A, B, C) with e1 = P_B - P_A, e2 = P_C - P_A, c = e1 x e2 and
n = c/|c|, the residual rho = sum |n - g| has

    drho/dc = (s - (n.s) n) / |c|,      s = sign(n - g)
    dc/dd_A = (e2 - e1) x r_A
    dc/dd_B = -(e2 x r_B)
    dc/dd_C = e1 x r_C

and per-pixel contributions are summed over every retained triplet the
pixel appears in, divided by the retained count.  The hard-example
selection is frozen during differentiation, and the sign subgradient at
an exactly zero component is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax

from .errors import EmptySampleError, ShapeMismatchError
from .geometry import EPS_DEGENERATE, CameraIntrinsics, DepthMap
from .normals import estimate_normal_map
from .reduction import chunked_mean

__all__ = [
    "LossReport",
    "CombinedLossReport",
    "DepthBinning",
    "ohem_filter",
    "vn_loss",
    "vn_loss_grad",
    "pairwise_loss",
    "surface_normal_loss",
    "quantize_depth",
    "dequantize_bin",
    "wce_loss",
    "combined_loss",
]


@dataclass(frozen=True)
class LossReport:
    """Scalar loss plus the residuals behind it.

    ``per_sample`` lists every non-skipped residual in evaluation order;
    ``value`` is the deterministic chunked mean of the ``n_effective``
    residuals retained by hard-example selection (all of them for losses
    without a selection step).
    """

    value: float
    per_sample: np.ndarray
    n_effective: int

    def __post_init__(self):
        per_sample = np.asarray(self.per_sample, dtype=np.float64)
        per_sample = np.array(per_sample, copy=True)
        per_sample.setflags(write=False)
        object.__setattr__(self, "per_sample", per_sample)
        if self.n_effective > per_sample.size:
            raise ValueError("n_effective cannot exceed len(per_sample)")

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "n_effective": self.n_effective,
            "n_samples": int(self.per_sample.size),
        }


@dataclass(frozen=True)
class CombinedLossReport:
    """Weighted-sum objective with its two constituent reports."""

    value: float
    wce: LossReport
    vn: LossReport
    lam: float

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "lam": self.lam,
            "wce": self.wce.as_dict(),
            "vn": self.vn.as_dict(),
        }


@dataclass(frozen=True)
class DepthBinning:
    """Discretization of [d_min, d_max] into B bins, log or linear."""

    d_min: float
    d_max: float
    n_bins: int
    spacing: str = "log"

    def __post_init__(self):
        if not 0.0 < self.d_min < self.d_max:
            raise ValueError("need 0 < d_min < d_max")
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        if self.spacing not in ("log", "linear"):
            raise ValueError("spacing must be 'log' or 'linear'")


def ohem_filter(residuals, keep: float) -> np.ndarray:
    """Indices of the ceil(keep * n) largest residuals.

    Ties go to the smaller index (stable sort on the negated values),
    making selection deterministic.  The epsilon in the ceiling guards
    against float fuzz like 0.1 * 10 landing just above 1.
    """
    if not 0.0 < keep <= 1.0:
        raise ValueError("keep must be in (0, 1]")
    values = np.asarray(residuals, dtype=np.float64).reshape(-1)
    if values.size == 0:
        return np.empty(0, dtype=np.int64)
    n_keep = max(1, math.ceil(keep * values.size - 1e-12))
    order = np.argsort(-values, kind="stable")
    return order[:n_keep].astype(np.int64)


def _triplet_pixel_array(triplets) -> np.ndarray:
    pixels = getattr(triplets, "triplets", triplets)
    pixels = np.asarray(pixels, dtype=np.int64)
    if pixels.ndim != 3 or pixels.shape[1:] != (3, 2):
        raise ShapeMismatchError(
            f"triplets must be (N, 3, 2) pixel coordinates, got {pixels.shape}"
        )
    return pixels


def _pair_pixel_array(pairs) -> np.ndarray:
    pixels = getattr(pairs, "pairs", pairs)
    pixels = np.asarray(pixels, dtype=np.int64)
    if pixels.ndim != 3 or pixels.shape[1:] != (2, 2):
        raise ShapeMismatchError(
            f"pairs must be (N, 2, 2) pixel coordinates, got {pixels.shape}"
        )
    return pixels


def _check_depth_pair(pred: DepthMap, gt: DepthMap) -> None:
    if pred.values.shape != gt.values.shape:
        raise ShapeMismatchError("pred and gt dimensions differ")
    if not np.array_equal(pred.mask, gt.mask):
        raise ShapeMismatchError("pred and gt masks differ")


def _check_pixels_valid(pixels: np.ndarray, depth: DepthMap) -> None:
    rows = pixels[..., 0]
    cols = pixels[..., 1]
    if (
        rows.min(initial=0) < 0
        or cols.min(initial=0) < 0
        or rows.max(initial=-1) >= depth.height
        or cols.max(initial=-1) >= depth.width
    ):
        raise ValueError("pixel index out of image bounds")
    if not np.all(depth.mask[rows, cols]):
        raise ValueError("sample references a mask-invalid pixel")


class _TripletGeometry:
    """Everything the loss and its gradient need, gathered per triplet."""

    def __init__(self, depth: DepthMap, rays_flat: np.ndarray, flat: np.ndarray):
        self.d = depth.values.reshape(-1)[flat]
        self.r = rays_flat[flat]
        p = self.d[:, :, None] * self.r
        self.e1 = p[:, 1] - p[:, 0]
        self.e2 = p[:, 2] - p[:, 0]
        self.cross = np.cross(self.e1, self.e2)
        self.cross_norm = np.linalg.norm(self.cross, axis=1)
        self.degenerate = self.cross_norm <= EPS_DEGENERATE
        safe = np.where(self.degenerate, 1.0, self.cross_norm)
        self.normal = self.cross / safe[:, None]
        self.normal[self.degenerate] = 0.0


def _vn_core(pred, gt, k, triplets):
    pixels = _triplet_pixel_array(triplets)
    _check_depth_pair(pred, gt)
    _check_pixels_valid(pixels, gt)
    rays = k.pixel_rays(pred.height, pred.width).reshape(-1, 3)
    flat = pixels[:, :, 0] * pred.width + pixels[:, :, 1]
    geo_p = _TripletGeometry(pred, rays, flat)
    geo_g = _TripletGeometry(gt, rays, flat)
    kept = ~geo_p.degenerate & ~geo_g.degenerate
    residuals = np.abs(geo_p.normal - geo_g.normal).sum(axis=1)[kept]
    return geo_p, geo_g, kept, flat, residuals


def vn_loss(
    pred_depth: DepthMap,
    gt_depth: DepthMap,
    k: CameraIntrinsics,
    triplets,
    ohem_keep: float = 0.5,
) -> LossReport:
    """Mean L1 gap between predicted and gt triplet plane normals.

    Triplets whose predicted points are near-colinear are skipped
    entirely (they contribute neither residual nor denominator).  The
    retained residuals are summed in descending order, which makes the
    reported value bitwise invariant under triplet permutation.

    Raises
    ------
    EmptySampleError
        Every triplet was skipped (or none were supplied).
    """
    _, _, _, _, residuals = _vn_core(pred_depth, gt_depth, k, triplets)
    retained = ohem_filter(residuals, ohem_keep)
    if retained.size == 0:
        raise EmptySampleError("no non-degenerate triplets to evaluate")
    return LossReport(
        value=chunked_mean(residuals[retained]),
        per_sample=residuals,
        n_effective=int(retained.size),
    )


def vn_loss_grad(
    pred_depth: DepthMap,
    gt_depth: DepthMap,
    k: CameraIntrinsics,
    triplets,
    ohem_keep: float = 0.5,
) -> tuple[LossReport, np.ndarray]:
    """Loss plus d(loss)/d(depth) at every pixel, from the chain rule.

    The returned grid is exactly zero at pixels no retained triplet
    touches (and at mask-invalid pixels, which no valid triplet may
    reference).  Selection of hard examples is frozen: the gradient is
    that of the mean over the triplets retained at the current point.
    """
    geo_p, geo_g, kept, flat, residuals = _vn_core(
        pred_depth, gt_depth, k, triplets
    )
    retained = ohem_filter(residuals, ohem_keep)
    if retained.size == 0:
        raise EmptySampleError("no non-degenerate triplets to evaluate")
    report = LossReport(
        value=chunked_mean(residuals[retained]),
        per_sample=residuals,
        n_effective=int(retained.size),
    )

    rows = np.flatnonzero(kept)[retained]
    s = np.sign(geo_p.normal[rows] - geo_g.normal[rows])
    n = geo_p.normal[rows]
    w = (s - np.einsum("ij,ij->i", n, s)[:, None] * n) / geo_p.cross_norm[
        rows
    ][:, None]

    e1 = geo_p.e1[rows]
    e2 = geo_p.e2[rows]
    r = geo_p.r[rows]
    dc = np.empty((rows.size, 3, 3))
    dc[:, 0] = np.cross(e2 - e1, r[:, 0])
    dc[:, 1] = -np.cross(e2, r[:, 1])
    dc[:, 2] = np.cross(e1, r[:, 2])
    contrib = np.einsum("ij,ivj->iv", w, dc) / float(retained.size)

    grad_flat = np.zeros(pred_depth.height * pred_depth.width)
    np.add.at(grad_flat, flat[rows].reshape(-1), contrib.reshape(-1))
    return report, grad_flat.reshape(pred_depth.height, pred_depth.width)


def pairwise_loss(
    pred_depth: DepthMap,
    gt_depth: DepthMap,
    k: CameraIntrinsics,
    pairs,
) -> LossReport:
    """Mean (1 - cosine) between predicted and gt pair direction vectors.

    Pairs whose predicted (or gt) vector has exactly zero length are
    skipped; with distinct valid pixels that cannot happen, so the guard
    only matters for hand-built inputs.
    """
    pixels = _pair_pixel_array(pairs)
    _check_depth_pair(pred_depth, gt_depth)
    _check_pixels_valid(pixels, gt_depth)
    rays = k.pixel_rays(pred_depth.height, pred_depth.width).reshape(-1, 3)
    flat = pixels[:, :, 0] * pred_depth.width + pixels[:, :, 1]

    def vectors(depth):
        d = depth.values.reshape(-1)[flat]
        p = d[:, :, None] * rays[flat]
        return p[:, 1] - p[:, 0]

    vp = vectors(pred_depth)
    vg = vectors(gt_depth)
    np_norm = np.linalg.norm(vp, axis=1)
    ng_norm = np.linalg.norm(vg, axis=1)
    kept = (np_norm > 0.0) & (ng_norm > 0.0)
    cos = np.einsum("ij,ij->i", vp[kept], vg[kept]) / (
        np_norm[kept] * ng_norm[kept]
    )
    residuals = 1.0 - np.clip(cos, -1.0, 1.0)
    if residuals.size == 0:
        raise EmptySampleError("no usable pairs")
    return LossReport(
        value=chunked_mean(residuals),
        per_sample=residuals,
        n_effective=int(residuals.size),
    )


def surface_normal_loss(
    pred_depth: DepthMap,
    gt_depth: DepthMap,
    k: CameraIntrinsics,
    patch_half_size: int = 1,
) -> LossReport:
    """Mean angle (degrees) between plane-fit normal maps of pred and gt.

    Normals come from :func:`vnkit.normals.estimate_normal_map` on each
    cloud; only pixels where both fits succeed contribute, in row-major
    order.
    """
    _check_depth_pair(pred_depth, gt_depth)
    nm_p = estimate_normal_map(pred_depth, k, patch_half_size)
    nm_g = estimate_normal_map(gt_depth, k, patch_half_size)
    common = nm_p.valid & nm_g.valid
    if not np.any(common):
        raise EmptySampleError("no pixel has a valid fit in both maps")
    dots = np.einsum("ij,ij->i", nm_p.normals[common], nm_g.normals[common])
    residuals = np.degrees(np.arccos(np.clip(dots, -1.0, 1.0)))
    return LossReport(
        value=chunked_mean(residuals),
        per_sample=residuals,
        n_effective=int(residuals.size),
    )


def quantize_depth(d, b: DepthBinning):
    """Bin index of depth(s) ``d`` after clamping into [d_min, d_max].

    Log spacing: floor(B * (ln d - ln d_min) / (ln d_max - ln d_min)),
    clamped so d = d_max lands in the last bin.  Accepts scalars or
    arrays; returns matching int64 output.
    """
    arr = np.clip(np.asarray(d, dtype=np.float64), b.d_min, b.d_max)
    if b.spacing == "log":
        frac = (np.log(arr) - math.log(b.d_min)) / (
            math.log(b.d_max) - math.log(b.d_min)
        )
    else:
        frac = (arr - b.d_min) / (b.d_max - b.d_min)
    idx = np.floor(b.n_bins * frac).astype(np.int64)
    idx = np.clip(idx, 0, b.n_bins - 1)
    return idx if idx.ndim else int(idx)


def dequantize_bin(idx, b: DepthBinning):
    """Representative depth of bin(s): geometric (log) or arithmetic midpoint."""
    idx = np.asarray(idx)
    if np.any(idx < 0) or np.any(idx >= b.n_bins):
        raise ValueError("bin index out of range")
    lo_frac = idx / b.n_bins
    hi_frac = (idx + 1) / b.n_bins
    if b.spacing == "log":
        log_span = math.log(b.d_max) - math.log(b.d_min)
        out = np.exp(
            math.log(b.d_min) + (lo_frac + hi_frac) / 2.0 * log_span
        )
    else:
        span = b.d_max - b.d_min
        out = b.d_min + (lo_frac + hi_frac) / 2.0 * span
    return out if out.ndim else float(out)


def wce_loss(
    logits: np.ndarray,
    gt_depth: DepthMap,
    b: DepthBinning,
    ig_sigma: float = 0.5,
) -> LossReport:
    """Cross-entropy over depth bins with proximity-weighted targets.

    Per valid pixel with ground-truth bin p, the loss is
    ``-sum_q H(p, q) * log softmax(logits)_q`` where
    ``H(p, q) = exp(-ig_sigma * (p - q)^2)`` spreads the target mass
    over nearby bins; large ``ig_sigma`` recovers plain one-hot
    cross-entropy numerically.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (gt_depth.height, gt_depth.width, b.n_bins):
        raise ShapeMismatchError(
            f"logits must be (H, W, {b.n_bins}), got {logits.shape}"
        )
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    if not ig_sigma > 0.0:
        raise ValueError("ig_sigma must be positive")
    mask = gt_depth.mask
    if not np.any(mask):
        raise EmptySampleError("no valid pixels")
    ls = log_softmax(logits[mask], axis=-1)
    p = quantize_depth(gt_depth.values[mask], b)
    q = np.arange(b.n_bins, dtype=np.float64)
    weights = np.exp(-ig_sigma * (p[:, None].astype(np.float64) - q) ** 2)
    residuals = -(weights * ls).sum(axis=1)
    return LossReport(
        value=chunked_mean(residuals),
        per_sample=residuals,
        n_effective=int(residuals.size),
    )


def combined_loss(
    logits: np.ndarray,
    pred_depth: DepthMap,
    gt_depth: DepthMap,
    k: CameraIntrinsics,
    triplets,
    b: DepthBinning,
    lam: float = 5.0,
    ohem_keep: float = 0.5,
    ig_sigma: float = 0.5,
) -> CombinedLossReport:
    """Weighted total objective: bin cross-entropy plus lam * normal loss."""
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    wce = wce_loss(logits, gt_depth, b, ig_sigma)
    vn = vn_loss(pred_depth, gt_depth, k, triplets, ohem_keep)
    return CombinedLossReport(
        value=wce.value + lam * vn.value, wce=wce, vn=vn, lam=lam
    )
