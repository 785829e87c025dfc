"""Depth-prediction and surface-normal evaluation metrics.

Depth metrics over the shared valid mask (pred p, ground truth g):

    rel     = mean |p - g| / g
    log10   = mean |log10 p - log10 g|
    rms     = sqrt(mean (p - g)^2)
    rms_log = sqrt(mean (ln p - ln g)^2)
    delta_i = fraction with max(p/g, g/p) < 1.25**i   (strict <)

Normal metrics are angular errors in degrees: mean, median (lower
middle for even counts), and the fractions under 11.25, 22.5 and 30
degrees, all strict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySampleError, InvalidDepthError, ShapeMismatchError
from .geometry import DepthMap
from .normals import NormalMap
from .reduction import chunked_mean

__all__ = [
    "DepthMetricsReport",
    "NormalMetricsReport",
    "depth_metrics",
    "normal_metrics",
]

# Nonpositive predictions cannot enter a logarithm; they are clipped to
# this floor for the two log metrics and counted in n_clipped.
LOG_CLIP_FLOOR = 1e-6

NORMAL_THRESHOLDS_DEG = (11.25, 22.5, 30.0)


@dataclass(frozen=True)
class DepthMetricsReport:
    rel: float
    log10: float
    rms: float
    rms_log: float
    delta1: float
    delta2: float
    delta3: float
    n_pixels: int
    n_clipped: int = 0

    def as_dict(self) -> dict:
        return {
            "rel": self.rel,
            "log10": self.log10,
            "rms": self.rms,
            "rms_log": self.rms_log,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "delta3": self.delta3,
            "n_pixels": self.n_pixels,
            "n_clipped": self.n_clipped,
        }


@dataclass(frozen=True)
class NormalMetricsReport:
    mean_deg: float
    median_deg: float
    pct_11_25: float
    pct_22_5: float
    pct_30: float
    n_pixels: int

    def as_dict(self) -> dict:
        return {
            "mean_deg": self.mean_deg,
            "median_deg": self.median_deg,
            "pct_11_25": self.pct_11_25,
            "pct_22_5": self.pct_22_5,
            "pct_30": self.pct_30,
            "n_pixels": self.n_pixels,
        }


def _flatten_depth_pair(pred, gt, mask):
    """Admit DepthMap pairs (shared mask) or raw arrays + explicit mask.

    The raw-array path exists so callers can score predictions that a
    DepthMap would reject (e.g. nonpositive values), exercising the
    clipping rule.
    """
    if isinstance(pred, DepthMap) and isinstance(gt, DepthMap):
        if pred.values.shape != gt.values.shape:
            raise ShapeMismatchError("pred and gt dimensions differ")
        if not np.array_equal(pred.mask, gt.mask):
            raise ShapeMismatchError("pred and gt masks differ")
        if mask is None:
            mask = gt.mask
        else:
            mask = np.asarray(mask, dtype=bool) & gt.mask
        return pred.values[mask], gt.values[mask]
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatchError("pred and gt dimensions differ")
    if mask is None:
        raise ValueError("raw-array inputs need an explicit mask")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != gt.shape:
        raise ShapeMismatchError("mask shape differs from depth shape")
    g = gt[mask]
    if g.size and not (np.all(np.isfinite(g)) and np.all(g > 0.0)):
        raise InvalidDepthError("gt must be finite and positive on the mask")
    return pred[mask], g


def depth_metrics(
    pred, gt, mask=None, max_depth: float | None = None
) -> DepthMetricsReport:
    """Score a depth prediction against ground truth on the valid mask.

    Parameters
    ----------
    pred, gt
        Either two DepthMaps with identical masks, or two raw arrays
        with ``mask`` supplied.
    mask
        Optional extra restriction intersected with the shared mask.
    max_depth
        If set, pixels with gt above it are excluded (range cap).

    Raises
    ------
    EmptySampleError
        Nothing left to score after masking.
    """
    p, g = _flatten_depth_pair(pred, gt, mask)
    if max_depth is not None:
        keep = g <= max_depth
        p, g = p[keep], g[keep]
    if p.size == 0:
        raise EmptySampleError("no valid pixels to score")

    rel = chunked_mean(np.abs(p - g) / g)
    rms = float(np.sqrt(chunked_mean((p - g) ** 2)))

    clipped = p <= 0.0
    n_clipped = int(np.count_nonzero(clipped))
    p_log = np.where(clipped, LOG_CLIP_FLOOR, p)
    log10 = chunked_mean(np.abs(np.log10(p_log) - np.log10(g)))
    rms_log = float(np.sqrt(chunked_mean((np.log(p_log) - np.log(g)) ** 2)))

    # Nonpositive predictions get an infinite ratio: they fail every
    # threshold instead of poisoning the arithmetic.
    ratio = np.full(p.shape, np.inf)
    pos = p > 0.0
    ratio[pos] = np.maximum(p[pos] / g[pos], g[pos] / p[pos])
    n = p.size
    delta1 = np.count_nonzero(ratio < 1.25) / n
    delta2 = np.count_nonzero(ratio < 1.25**2) / n
    delta3 = np.count_nonzero(ratio < 1.25**3) / n

    return DepthMetricsReport(
        rel=rel,
        log10=log10,
        rms=rms,
        rms_log=rms_log,
        delta1=delta1,
        delta2=delta2,
        delta3=delta3,
        n_pixels=n,
        n_clipped=n_clipped,
    )


def normal_metrics(pred: NormalMap, gt: NormalMap) -> NormalMetricsReport:
    """Angular-error statistics between two oriented normal maps.

    Only pixels valid in both maps count; the angle is taken directly
    (no sign re-alignment: orientation disagreement is an error).
    """
    if pred.normals.shape != gt.normals.shape:
        raise ShapeMismatchError("normal map dimensions differ")
    common = pred.valid & gt.valid
    if not np.any(common):
        raise EmptySampleError("no pixel valid in both normal maps")
    dots = np.einsum("ij,ij->i", pred.normals[common], gt.normals[common])
    ang = np.degrees(np.arccos(np.clip(dots, -1.0, 1.0)))
    n = ang.size
    ordered = np.sort(ang)
    median = float(ordered[(n - 1) // 2])
    t1, t2, t3 = NORMAL_THRESHOLDS_DEG
    return NormalMetricsReport(
        mean_deg=chunked_mean(ang),
        median_deg=median,
        pct_11_25=np.count_nonzero(ang < t1) / n,
        pct_22_5=np.count_nonzero(ang < t2) / n,
        pct_30=np.count_nonzero(ang < t3) / n,
        n_pixels=n,
    )
