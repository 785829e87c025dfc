"""Direct depth-grid optimization with pixel and triplet-normal losses.

This is a small stand-in for learning: instead of training a predictor,
plain gradient descent adjusts every valid depth pixel to minimize

    mean |d - gt|  +  lambda_vn * triplet-normal loss

using the analytic gradient from :mod:`vnkit.losses`.  Triplets are
re-sampled every ``triplet_refresh_every`` steps (batch b uses seed
(seed + b) mod 2**64), and depths are clamped into [d_min, d_max] after
each update.

Hard-example selection is disabled here (keep = 1): with one depth grid
there is no mini-batch noise for it to fight, and a frozen selection
would make the descent target jump around.

Stability: the pixel term moves each pixel by at most
step_size / n_valid per step and the normal term adds a comparable
bounded kick, so for the standard 64x64 scene any step_size <= 2 keeps
the total loss non-increasing between triplet refreshes (each refresh
re-rolls the normal term, which may jump the reported value).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySampleError, RefinementDiverged, ShapeMismatchError
from .geometry import CameraIntrinsics, DepthMap
from .losses import vn_loss_grad
from .reduction import chunked_mean
from .sampling import SamplingConfig, sample_triplets

__all__ = ["RefineConfig", "refine_depth"]


@dataclass(frozen=True)
class RefineConfig:
    """Gradient-descent schedule and sampling parameters.

    The clamp bounds and triplet-sampling fields ride along here so a
    refinement run is reproducible from the config alone.
    """

    steps: int
    step_size: float
    lambda_vn: float = 5.0
    pixel_loss: str = "l1"
    triplet_refresh_every: int = 50
    seed: int = 0
    n_triplets: int = 2000
    d_min: float = 0.1
    d_max: float = 20.0
    alpha_deg: float = 120.0
    beta_deg: float = 30.0
    theta_m: float = 0.6
    max_attempts_per_group: int = 200

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if not self.step_size > 0.0:
            raise ValueError("step_size must be positive")
        if self.lambda_vn < 0.0:
            raise ValueError("lambda_vn must be nonnegative")
        if self.pixel_loss != "l1":
            raise ValueError("only the 'l1' pixel loss is available")
        if self.triplet_refresh_every < 1:
            raise ValueError("triplet_refresh_every must be positive")
        if self.n_triplets < 1:
            raise ValueError("n_triplets must be positive")
        if not 0.0 < self.d_min < self.d_max:
            raise ValueError("need 0 < d_min < d_max")


def refine_depth(
    init: DepthMap, gt: DepthMap, k: CameraIntrinsics, cfg: RefineConfig
) -> tuple[DepthMap, np.ndarray]:
    """Descend from ``init`` toward ``gt`` under the combined objective.

    Returns the refined map and a (steps+1, 4) float64 history of
    ``(step, pixel_loss, vn_loss, total)``: one row per step evaluated
    before its update, plus a final row for the end state (scored with
    the last triplet batch).

    Raises
    ------
    RefinementDiverged
        A non-finite total appeared; the partial history is attached.
    """
    if init.values.shape != gt.values.shape:
        raise ShapeMismatchError("init and gt dimensions differ")
    if not np.array_equal(init.mask, gt.mask):
        raise ShapeMismatchError("init and gt masks differ")
    mask = gt.mask
    n_valid = int(np.count_nonzero(mask))
    if n_valid == 0:
        raise EmptySampleError("nothing to refine: empty mask")

    d = init.values.copy()
    g = gt.values
    history: list[tuple[float, float, float, float]] = []
    triplets = None

    def losses_and_grad(values):
        residual = np.where(mask, values - g, 0.0)
        pixel_loss = chunked_mean(np.abs(residual[mask]))
        grad = np.sign(residual) / n_valid
        if cfg.lambda_vn > 0.0:
            report, vn_grad = vn_loss_grad(
                DepthMap(values, mask), gt, k, triplets, ohem_keep=1.0
            )
            vn_value = report.value
            grad = grad + cfg.lambda_vn * vn_grad
        else:
            vn_value = 0.0
        return pixel_loss, vn_value, grad

    for step in range(cfg.steps):
        if cfg.lambda_vn > 0.0 and step % cfg.triplet_refresh_every == 0:
            batch = step // cfg.triplet_refresh_every
            triplets = sample_triplets(
                gt,
                k,
                SamplingConfig(
                    n_groups=cfg.n_triplets,
                    seed=(cfg.seed + batch) % 2**64,
                    alpha_deg=cfg.alpha_deg,
                    beta_deg=cfg.beta_deg,
                    theta_m=cfg.theta_m,
                    max_attempts_per_group=cfg.max_attempts_per_group,
                ),
            )
            if len(triplets) == 0:
                raise EmptySampleError(
                    "triplet sampling found nothing; scene too small for "
                    f"theta_m={cfg.theta_m}"
                )
        pixel_loss, vn_value, grad = losses_and_grad(d)
        total = pixel_loss + cfg.lambda_vn * vn_value
        history.append((float(step), pixel_loss, vn_value, total))
        if not np.isfinite(total):
            raise RefinementDiverged(
                f"non-finite loss at step {step}",
                history=np.array(history, dtype=np.float64),
            )
        d = np.where(mask, np.clip(d - cfg.step_size * grad, cfg.d_min, cfg.d_max), 0.0)

    pixel_loss, vn_value, _ = losses_and_grad(d)
    total = pixel_loss + cfg.lambda_vn * vn_value
    history.append((float(cfg.steps), pixel_loss, vn_value, total))
    if not np.isfinite(total):
        raise RefinementDiverged(
            f"non-finite loss at step {cfg.steps}",
            history=np.array(history, dtype=np.float64),
        )
    return DepthMap(d, mask), np.array(history, dtype=np.float64)
