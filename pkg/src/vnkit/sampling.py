"""Random pixel-triplet sampling under geometric restrictions.

A triplet of back-projected points (A, B, C) is accepted only if

* angle window (non-colinearity): the angle between AB and AC and the
  angle between BC and BA both lie within [beta_deg, alpha_deg]; the
  third angle is deliberately unconstrained;
* long range: all three pairwise distances exceed ``theta_m`` meters.

Restrictions are always evaluated on the ground-truth cloud so the
sampled triplets stay fixed while a predicted depth map changes.

Random stream (portable)
------------------------
Draws come from the Philox 4x64 counter-based generator keyed with the
two 64-bit words ``(seed, domain)`` where domain 0 marks triplet
sampling and domain 1 pair sampling.  The stream is addressed by
absolute word position: word ``t*3*N + 3*g + j`` (``N`` = group count)
is the j-th draw of attempt ``t`` for group ``g``.  An attempt maps its
words to candidate ranks ``word % n_valid`` into the row-major list of
valid pixels (the modulo keeps the scheme portable at the price of a
bias below 2**-40 for realistic image sizes), and is accepted iff the
ranks are pairwise distinct and both restrictions hold.  A group's
triplet is its first accepted attempt.  Because every word has an
absolute address, splitting the group range across workers cannot
change the result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EmptySampleError, ShapeMismatchError
from .geometry import (
    EPS_DEGENERATE,
    CameraIntrinsics,
    DepthMap,
    backproject_map,
)

__all__ = [
    "SamplingConfig",
    "TripletSet",
    "PairSet",
    "satisfies_r1",
    "satisfies_r2",
    "restriction_mask",
    "sample_triplets",
    "sample_pairs",
]

_DOMAIN_TRIPLETS = 0
_DOMAIN_PAIRS = 1

_SEED_LIMIT = 2**64


def _validate_seed(seed: int) -> None:
    if not isinstance(seed, (int, np.integer)):
        raise ValueError("seed must be an integer")
    if not 0 <= int(seed) < _SEED_LIMIT:
        raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class SamplingConfig:
    """Knobs for constrained triplet sampling.

    ``max_attempts_per_group`` bounds the rejection loop per group; a
    group that exhausts it is dropped and the result is flagged
    underfull.
    """

    n_groups: int
    seed: int
    alpha_deg: float = 120.0
    beta_deg: float = 30.0
    theta_m: float = 0.6
    max_attempts_per_group: int = 200

    def __post_init__(self):
        if self.n_groups < 1:
            raise ValueError("n_groups must be positive")
        if not 0.0 < self.beta_deg < self.alpha_deg < 180.0:
            raise ValueError("need 0 < beta_deg < alpha_deg < 180")
        if not self.theta_m > 0.0:
            raise ValueError("theta_m must be positive")
        if self.max_attempts_per_group < 1:
            raise ValueError("max_attempts_per_group must be positive")
        _validate_seed(self.seed)


@dataclass(frozen=True)
class TripletSet:
    """Accepted triplets as pixel coordinates, in group order.

    ``triplets`` has shape (M, 3, 2): vertex order (A, B, C), each row
    ``(row, col)``.  ``attempts_used`` totals the rejection attempts
    spent across all groups (failed groups count their full budget);
    ``underfull`` is True when M fell short of ``config.n_groups``.
    """

    triplets: np.ndarray
    config: SamplingConfig
    attempts_used: int
    underfull: bool = False

    def __post_init__(self):
        t = np.asarray(self.triplets, dtype=np.int64)
        if t.ndim != 3 or t.shape[1:] != (3, 2):
            raise ShapeMismatchError(
                f"triplets must be (N, 3, 2), got {t.shape}"
            )
        t = np.array(t, copy=True)
        t.setflags(write=False)
        object.__setattr__(self, "triplets", t)

    def __len__(self) -> int:
        return self.triplets.shape[0]


@dataclass(frozen=True)
class PairSet:
    """Accepted long-range pixel pairs, shape (M, 2, 2), group order."""

    pairs: np.ndarray
    attempts_used: int
    underfull: bool = False

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=np.int64)
        if p.ndim != 3 or p.shape[1:] != (2, 2):
            raise ShapeMismatchError(f"pairs must be (N, 2, 2), got {p.shape}")
        p = np.array(p, copy=True)
        p.setflags(write=False)
        object.__setattr__(self, "pairs", p)

    def __len__(self) -> int:
        return self.pairs.shape[0]


def _raw_words(key: np.ndarray, start: int, count: int) -> np.ndarray:
    """Philox words [start, start+count) by absolute stream position.

    ``advance`` moves the counter in whole 4-word blocks, so the block
    containing ``start`` is skipped and the leading remainder discarded.
    """
    bg = np.random.Philox(key=key)
    block, offset = divmod(int(start), 4)
    if block:
        bg.advance(block)
    return bg.random_raw(offset + int(count))[offset:]


def _stream_key(seed: int, domain: int) -> np.ndarray:
    return np.array([seed, domain], dtype=np.uint64)


def restriction_mask(
    pa: np.ndarray,
    pb: np.ndarray,
    pc: np.ndarray,
    alpha_deg: float,
    beta_deg: float,
    theta_m: float,
) -> np.ndarray:
    """Vectorized acceptance test for stacked (N, 3) point triplets.

    Checks the long-range condition on all three pairwise distances and
    the angle window at vertices A and B.  Coincident points fail the
    distance check, so no division guard is observable in the result.
    """
    pa = np.asarray(pa, dtype=np.float64)
    pb = np.asarray(pb, dtype=np.float64)
    pc = np.asarray(pc, dtype=np.float64)
    ab = pb - pa
    ac = pc - pa
    bc = pc - pb
    d_ab = np.linalg.norm(ab, axis=-1)
    d_ac = np.linalg.norm(ac, axis=-1)
    d_bc = np.linalg.norm(bc, axis=-1)
    ok = (d_ab > theta_m) & (d_ac > theta_m) & (d_bc > theta_m)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_a = np.einsum("...i,...i->...", ab, ac) / (d_ab * d_ac)
        cos_b = np.einsum("...i,...i->...", bc, -ab) / (d_bc * d_ab)
        ang_a = np.degrees(np.arccos(np.clip(cos_a, -1.0, 1.0)))
        ang_b = np.degrees(np.arccos(np.clip(cos_b, -1.0, 1.0)))
        ok &= (ang_a >= beta_deg) & (ang_a <= alpha_deg)
        ok &= (ang_b >= beta_deg) & (ang_b <= alpha_deg)
    return ok


def satisfies_r1(pa, pb, pc, alpha_deg: float = 120.0, beta_deg: float = 30.0) -> bool:
    """Angle-window check at vertices A and B (scalar form).

    Coincident or nearly coincident points return False rather than
    raising: a degenerate triplet simply is not acceptable.
    """
    pa = np.asarray(pa, dtype=np.float64)
    pb = np.asarray(pb, dtype=np.float64)
    pc = np.asarray(pc, dtype=np.float64)
    ab = pb - pa
    ac = pc - pa
    bc = pc - pb
    norms = [np.linalg.norm(v) for v in (ab, ac, bc)]
    if min(norms) <= EPS_DEGENERATE:
        return False
    d_ab, d_ac, d_bc = norms
    cos_a = float(np.dot(ab, ac) / (d_ab * d_ac))
    cos_b = float(np.dot(bc, -ab) / (d_bc * d_ab))
    ang_a = float(np.degrees(np.arccos(np.clip(cos_a, -1.0, 1.0))))
    ang_b = float(np.degrees(np.arccos(np.clip(cos_b, -1.0, 1.0))))
    return (
        beta_deg <= ang_a <= alpha_deg and beta_deg <= ang_b <= alpha_deg
    )


def satisfies_r2(pa, pb, pc, theta_m: float = 0.6) -> bool:
    """True iff all three pairwise distances exceed ``theta_m``."""
    pa = np.asarray(pa, dtype=np.float64)
    pb = np.asarray(pb, dtype=np.float64)
    pc = np.asarray(pc, dtype=np.float64)
    return bool(
        np.linalg.norm(pb - pa) > theta_m
        and np.linalg.norm(pc - pb) > theta_m
        and np.linalg.norm(pa - pc) > theta_m
    )


def _fill_groups(
    points: np.ndarray,
    n_total: int,
    tuple_size: int,
    key: np.ndarray,
    accept,
    max_attempts: int,
    g0: int,
    g1: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Run rejection sampling for the contiguous group range [g0, g1).

    ``accept`` maps a (m, tuple_size) rank array to a boolean mask.
    Returns chosen ranks (-1 rows = failed) and per-group attempt
    counts.  Word addresses are absolute, so any partition of the group
    range yields identical output.
    """
    n = g1 - g0
    n_points = points.shape[0]
    chosen = np.full((n, tuple_size), -1, dtype=np.int64)
    attempts = np.full(n, max_attempts, dtype=np.int64)
    pending = np.arange(n)
    words_per_round = tuple_size * n_total
    for t in range(max_attempts):
        if pending.size == 0:
            break
        words = _raw_words(
            key, t * words_per_round + tuple_size * g0, tuple_size * n
        )
        ranks = (words.reshape(n, tuple_size) % np.uint64(n_points)).astype(
            np.int64
        )
        cand = ranks[pending]
        distinct = np.ones(pending.size, dtype=bool)
        for i in range(tuple_size):
            for j in range(i + 1, tuple_size):
                distinct &= cand[:, i] != cand[:, j]
        ok = distinct.copy()
        if np.any(distinct):
            ok[distinct] = accept(cand[distinct])
        newly = pending[ok]
        chosen[newly] = cand[ok]
        attempts[newly] = t + 1
        pending = pending[~ok]
    return chosen, attempts


def _sample_ranks(
    points: np.ndarray,
    n_groups: int,
    tuple_size: int,
    key: np.ndarray,
    accept,
    max_attempts: int,
    workers: int,
) -> tuple[np.ndarray, int]:
    """Dispatch `_fill_groups` over contiguous chunks; order-preserving."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1:
        chosen, attempts = _fill_groups(
            points, n_groups, tuple_size, key, accept, max_attempts, 0, n_groups
        )
        return chosen, int(attempts.sum())
    bounds = np.linspace(0, n_groups, workers + 1).astype(int)
    spans = [
        (int(bounds[i]), int(bounds[i + 1]))
        for i in range(workers)
        if bounds[i] < bounds[i + 1]
    ]
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        parts = list(
            pool.map(
                lambda span: _fill_groups(
                    points,
                    n_groups,
                    tuple_size,
                    key,
                    accept,
                    max_attempts,
                    span[0],
                    span[1],
                ),
                spans,
            )
        )
    chosen = np.concatenate([p[0] for p in parts], axis=0)
    attempts = np.concatenate([p[1] for p in parts], axis=0)
    return chosen, int(attempts.sum())


def sample_index_triplets(
    points: np.ndarray,
    n_groups: int,
    seed: int,
    alpha_deg: float = 120.0,
    beta_deg: float = 30.0,
    theta_m: float = 0.6,
    max_attempts_per_group: int = 200,
    workers: int = 1,
    domain: int = _DOMAIN_TRIPLETS,
) -> tuple[np.ndarray, int, bool]:
    """Sample restriction-passing index triplets from a raw point array.

    Shared core used both for depth-map pixel sampling and for sampling
    directly on unordered clouds (noise experiments).  Returns
    ``(indices (M, 3), attempts_used, underfull)`` with failed groups
    dropped but group order preserved.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ShapeMismatchError("points must be (N, 3)")
    if points.shape[0] < 3:
        raise EmptySampleError("need at least 3 points to sample triplets")
    _validate_seed(seed)

    def accept(cand: np.ndarray) -> np.ndarray:
        return restriction_mask(
            points[cand[:, 0]],
            points[cand[:, 1]],
            points[cand[:, 2]],
            alpha_deg,
            beta_deg,
            theta_m,
        )

    chosen, attempts_used = _sample_ranks(
        points,
        n_groups,
        3,
        _stream_key(seed, domain),
        accept,
        max_attempts_per_group,
        workers,
    )
    good = chosen[:, 0] >= 0
    return chosen[good], attempts_used, bool(np.count_nonzero(good) < n_groups)


def sample_triplets(
    gt_depth: DepthMap,
    k: CameraIntrinsics,
    cfg: SamplingConfig,
    workers: int = 1,
) -> TripletSet:
    """Sample pixel triplets whose ground-truth points pass both restrictions.

    Deterministic in (depth, intrinsics, config) for any ``workers``
    value; see the module docstring for the exact stream layout.  If a
    group exhausts its attempt budget it is dropped and the returned
    set is flagged ``underfull`` (zero accepted triplets is therefore a
    flag, not an error).
    """
    if gt_depth.n_valid < 3:
        raise EmptySampleError("need at least 3 valid pixels")
    cloud = backproject_map(gt_depth, k)
    indices, attempts_used, underfull = sample_index_triplets(
        cloud.points,
        cfg.n_groups,
        cfg.seed,
        cfg.alpha_deg,
        cfg.beta_deg,
        cfg.theta_m,
        cfg.max_attempts_per_group,
        workers,
    )
    return TripletSet(
        triplets=cloud.pixel_index[indices],
        config=cfg,
        attempts_used=attempts_used,
        underfull=underfull,
    )


def sample_pairs(
    gt_depth: DepthMap,
    k: CameraIntrinsics,
    n_pairs: int,
    seed: int,
    theta_m: float = 0.6,
    max_attempts_per_pair: int = 200,
    workers: int = 1,
) -> PairSet:
    """Sample pixel pairs more than ``theta_m`` apart on the gt cloud.

    Companion to the pairwise loss; stream domain 1, word layout
    ``t*2*N + 2*g + j`` otherwise mirroring triplet sampling.
    """
    if gt_depth.n_valid < 2:
        raise EmptySampleError("need at least 2 valid pixels")
    if n_pairs < 1:
        raise ValueError("n_pairs must be positive")
    _validate_seed(seed)
    cloud = backproject_map(gt_depth, k)
    points = cloud.points

    def accept(cand: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(points[cand[:, 0]] - points[cand[:, 1]], axis=-1)
        return d > theta_m

    chosen, attempts_used = _sample_ranks(
        points,
        n_pairs,
        2,
        _stream_key(seed, _DOMAIN_PAIRS),
        accept,
        max_attempts_per_pair,
        workers,
    )
    good = chosen[:, 0] >= 0
    return PairSet(
        pairs=cloud.pixel_index[chosen[good]],
        attempts_used=attempts_used,
        underfull=bool(np.count_nonzero(good) < n_pairs),
    )
