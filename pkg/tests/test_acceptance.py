"""Top-level acceptance gate.

Each test prints exactly one ``ACCEPTANCE <n> <name>: PASS/FAIL`` line
(run with ``pytest -s tests/test_acceptance.py`` to watch them) and then
asserts the same verdict, so the suite fails loudly too.  Tolerances and
runtime budgets are pinned as module constants.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager

import numpy as np

from naive import (
    naive_pairwise_loss,
    naive_r1,
    naive_r2,
    naive_ray,
    naive_surface_normal_loss,
    naive_triangle_normal,
    naive_vn_loss,
    naive_wce_loss,
    read_ply,
)
from vnkit import (
    EPS_DEGENERATE,
    CameraIntrinsics,
    DepthBinning,
    DepthMap,
    NoiseConfig,
    PointCloud,
    RefineConfig,
    SamplingConfig,
    combined_loss,
    depth_metrics,
    estimate_normal_map,
    normal_metrics,
    NormalMap,
    pairwise_loss,
    patch_size_sensitivity,
    read_pfm,
    refine_depth,
    sample_pairs,
    sample_triplets,
    standard_noisy_scene,
    standard_scene,
    surface_normal_loss,
    synthesize_scene,
    triangle_normal,
    vn_loss,
    vn_loss_grad,
    vn_sn_robustness,
    wce_loss,
    write_pfm,
    write_ply,
    write_triplets_csv,
)

FD_REL_TOL = 1e-4
FD_MARGIN = 1e-6
ORACLE_TOL = 1e-12
GRAD_BUDGET_S = 10.0
SPHERE_BUDGET_S = 60.0
SPHERE_SIGMAS = (0.0002, 0.001, 0.003, 0.01)

# 3-pixel depth fixture pred=(1.1, 1.8, 5), gt=(1, 2, 4), 40-digit values
FIX_LOG10 = 0.0613533962423188601729758268531
FIX_RMS = 0.5916079783099616042567328291561
FIX_RMS_LOG = 0.1527284225099497298598755665267

# refinement ablation constants frozen from a pilot run
ABLATION_NOISE_SIGMA = 0.03
ABLATION_STEPS = 200
ABLATION_STEP_SIZE = 0.05
ABLATION_N_TRIPLETS = 2000
ABLATION_SEEDS = 5


@contextmanager
def criterion(num: int, name: str):
    state = {"ok": False}
    try:
        yield state
    except BaseException:
        print(f"ACCEPTANCE {num} {name}: FAIL")
        raise
    verdict = "PASS" if state["ok"] else "FAIL"
    print(f"ACCEPTANCE {num} {name}: {verdict}")
    assert state["ok"], f"criterion {num} ({name})"


def cam16():
    return CameraIntrinsics(fx=16.0, fy=16.0, u0=7.5, v0=7.5)


def random_pair_16(seed: int):
    rng = np.random.default_rng(seed)
    gt = DepthMap.from_values(rng.uniform(1.5, 3.5, (16, 16)))
    pred = DepthMap.from_values(
        np.clip(gt.values + rng.normal(0.0, 0.08, (16, 16)), 0.2, None)
    )
    return pred, gt


def _residual_components(values, gt_normals, rays, tri, rows):
    """Signed residual components (m, 3) and cross norms (m,) for rows."""
    pix = tri[rows]
    d = values[pix[:, :, 0], pix[:, :, 1]]
    r = rays[pix[:, :, 0], pix[:, :, 1]]
    p = d[:, :, None] * r
    c = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    norms = np.linalg.norm(c, axis=1)
    comp = c / np.maximum(norms, EPS_DEGENERATE)[:, None] - gt_normals[rows]
    return comp, norms


def test_criterion_1_gradient_matches_finite_differences():
    with criterion(1, "analytic-gradient-vs-central-differences") as c:
        t0 = time.perf_counter()
        k = cam16()
        rays = k.pixel_rays(16, 16)
        worst = 0.0
        checked = 0
        for seed in range(10):
            pred, gt = random_pair_16(seed)
            ts = sample_triplets(
                gt, k, SamplingConfig(n_groups=200, seed=seed, theta_m=0.3)
            )
            assert not ts.underfull
            tri = ts.triplets
            _, grad = vn_loss_grad(pred, gt, k, tri, ohem_keep=1.0)

            # gt-side normals and the pixel -> triplet incidence
            g = gt.values[tri[:, :, 0], tri[:, :, 1]]
            gr = rays[tri[:, :, 0], tri[:, :, 1]]
            gp = g[:, :, None] * gr
            gc = np.cross(gp[:, 1] - gp[:, 0], gp[:, 2] - gp[:, 0])
            gt_normals = gc / np.linalg.norm(gc, axis=1)[:, None]
            flat = tri[:, :, 0] * 16 + tri[:, :, 1]
            touched = np.unique(flat)

            for fidx in touched:
                row, col = divmod(int(fidx), 16)
                rows = np.flatnonzero((flat == fidx).any(axis=1))
                h = 1e-4 * gt.values[row, col]

                # eligible pixels keep every residual component at least
                # FD_MARGIN from zero with a stable sign at the center and
                # both stencil points, so |.| stays smooth on the interval
                stencil = []
                eligible = True
                for delta in (0.0, h, -h):
                    vals = pred.values.copy()
                    vals[row, col] += delta
                    comp, norms = _residual_components(
                        vals, gt_normals, rays, tri, rows
                    )
                    if (
                        norms.min(initial=np.inf) <= 10.0 * EPS_DEGENERATE
                        or np.abs(comp).min(initial=np.inf) < FD_MARGIN
                    ):
                        eligible = False
                        break
                    stencil.append(np.sign(comp))
                if not eligible or not (
                    np.array_equal(stencil[0], stencil[1])
                    and np.array_equal(stencil[0], stencil[2])
                ):
                    continue

                vplus = pred.values.copy()
                vplus[row, col] += h
                vminus = pred.values.copy()
                vminus[row, col] -= h
                lp = vn_loss(
                    DepthMap(vplus, pred.mask), gt, k, tri, ohem_keep=1.0
                ).value
                lm = vn_loss(
                    DepthMap(vminus, pred.mask), gt, k, tri, ohem_keep=1.0
                ).value
                fd = (lp - lm) / (2.0 * h)
                an = grad[row, col]
                scale = max(abs(an), abs(fd))
                if scale < FD_MARGIN:
                    continue
                worst = max(worst, abs(fd - an) / scale)
                checked += 1
        elapsed = time.perf_counter() - t0
        print(
            f"  criterion 1 detail: {checked} pixels checked, worst rel "
            f"err {worst:.3e}, {elapsed:.2f} s"
        )
        c["ok"] = checked > 1000 and worst < FD_REL_TOL and elapsed < GRAD_BUDGET_S


def test_criterion_2_sphere_robustness():
    with criterion(2, "triplet-normals-beat-local-fits-under-noise") as c:
        t0 = time.perf_counter()
        table = vn_sn_robustness(
            NoiseConfig(sigma_list=SPHERE_SIGMAS, seed=0)
        )
        elapsed = time.perf_counter() - t0
        vn = table[:, 1]
        sn = table[:, 2]
        print(
            "  criterion 2 detail: vn "
            + ", ".join(f"{v:.4f}" for v in vn)
            + " | sn "
            + ", ".join(f"{v:.4f}" for v in sn)
            + f" | {elapsed:.2f} s"
        )
        c["ok"] = (
            bool(np.all(vn < sn))
            and bool(np.all(np.diff(sn) > 0.0))
            and elapsed < SPHERE_BUDGET_S
        )


def test_criterion_3_sampling_validity(tmp_path):
    with criterion(3, "triplets-reverify-constraints-and-worker-invariance") as c:
        spec = standard_scene()
        depth, _ = synthesize_scene(spec)
        cfg = SamplingConfig(n_groups=20_000, seed=123)
        ts1 = sample_triplets(depth, spec.intrinsics, cfg, workers=1)
        ts8 = sample_triplets(depth, spec.intrinsics, cfg, workers=8)
        assert not ts1.underfull

        p1 = tmp_path / "w1.csv"
        p8 = tmp_path / "w8.csv"
        comments = ("n=20000", "seed=123")
        write_triplets_csv(ts1, p1, comments=comments)
        write_triplets_csv(ts8, p8, comments=comments)
        byte_identical = p1.read_bytes() == p8.read_bytes()

        fx, fy, u0, v0 = (
            spec.intrinsics.fx,
            spec.intrinsics.fy,
            spec.intrinsics.u0,
            spec.intrinsics.v0,
        )
        vals = depth.values
        all_ok = True
        for triplet in ts1.triplets:
            pts = []
            for row, col in triplet:
                d = vals[row, col]
                r = naive_ray(row, col, fx, fy, u0, v0)
                pts.append((d * r[0], d * r[1], d * r[2]))
            if not naive_r1(*pts, 120.0, 30.0) or not naive_r2(*pts, 0.6):
                all_ok = False
                break
        print(
            f"  criterion 3 detail: {len(ts1)} triplets re-verified, "
            f"byte-identical={byte_identical}"
        )
        c["ok"] = len(ts1) == 20_000 and all_ok and byte_identical


def test_criterion_4_metric_oracle():
    with criterion(4, "metric-fixtures-reproduce-hand-derived-values") as c:
        pred = DepthMap.from_values(np.array([[1.1, 1.8, 5.0]]))
        gt = DepthMap.from_values(np.array([[1.0, 2.0, 4.0]]))
        m = depth_metrics(pred, gt)
        depth_ok = (
            abs(m.rel - 0.15) < ORACLE_TOL
            and abs(m.log10 - FIX_LOG10) < ORACLE_TOL
            and abs(m.rms - FIX_RMS) < ORACLE_TOL
            and abs(m.rms_log - FIX_RMS_LOG) < ORACLE_TOL
            and abs(m.delta1 - 2.0 / 3.0) < ORACLE_TOL
            and m.delta2 == 1.0
            and m.delta3 == 1.0
        )

        angles = [5.0, 10.0, 20.0, 40.0, 100.0]
        pr = np.array(
            [
                [math.sin(math.radians(a)), 0.0, math.cos(math.radians(a))]
                for a in angles
            ]
        )[None, :, :]
        gn = np.broadcast_to([0.0, 0.0, 1.0], (1, 5, 3)).copy()
        valid = np.ones((1, 5), dtype=bool)
        nm = normal_metrics(
            NormalMap(normals=pr, valid=valid),
            NormalMap(normals=gn, valid=valid),
        )
        normal_ok = (
            abs(nm.mean_deg - 35.0) < ORACLE_TOL
            and abs(nm.median_deg - 20.0) < ORACLE_TOL
            and nm.pct_11_25 == 0.4
            and nm.pct_22_5 == 0.6
            and nm.pct_30 == 0.6
        )

        # integer gt with exact differences: 1.2x overestimate is exact
        gt2 = DepthMap.from_values(np.array([[10.0, 20.0, 40.0, 80.0]]))
        m2 = depth_metrics(DepthMap.from_values(gt2.values * 1.2), gt2)
        scale_ok = m2.rel == 0.2 and m2.delta1 == 1.0
        print(
            f"  criterion 4 detail: depth_ok={depth_ok} "
            f"normal_ok={normal_ok} scale_ok={scale_ok}"
        )
        c["ok"] = depth_ok and normal_ok and scale_ok


def test_criterion_5_refinement_ablation():
    with criterion(5, "normal-loss-improves-refined-geometry") as c:
        spec = standard_scene()
        depth, gt_nm = synthesize_scene(spec)
        k = spec.intrinsics
        wins = 0
        for i in range(ABLATION_SEEDS):
            rng = np.random.default_rng(100 + i)
            init_v = np.clip(
                depth.values
                + rng.normal(0.0, ABLATION_NOISE_SIGMA, depth.values.shape),
                0.1,
                20.0,
            )
            init = DepthMap(init_v, depth.mask)
            results = {}
            for lam in (0.0, 5.0):
                cfg = RefineConfig(
                    steps=ABLATION_STEPS,
                    step_size=ABLATION_STEP_SIZE,
                    lambda_vn=lam,
                    seed=9 + i,
                    n_triplets=ABLATION_N_TRIPLETS,
                )
                refined, _ = refine_depth(init, depth, k, cfg)
                rel = depth_metrics(refined, depth).rel
                mean_deg = normal_metrics(
                    estimate_normal_map(refined, k, 2), gt_nm
                ).mean_deg
                results[lam] = (rel, mean_deg)
            rel0, deg0 = results[0.0]
            rel5, deg5 = results[5.0]
            print(
                f"  criterion 5 detail seed {i}: lam=0 rel {rel0:.5f} "
                f"deg {deg0:.3f} | lam=5 rel {rel5:.5f} deg {deg5:.3f}"
            )
            if deg5 < deg0 and rel5 <= rel0:
                wins += 1
        c["ok"] = wins == ABLATION_SEEDS


def test_criterion_6_patch_size_sensitivity():
    with criterion(6, "normal-drift-grows-with-patch-size-gap") as c:
        spec = standard_noisy_scene()
        depth, _ = synthesize_scene(spec)
        matrix = patch_size_sensitivity(depth, spec.intrinsics, [1, 2, 5])
        near = float(matrix[0, 1])  # sizes 1 vs 2
        far = float(matrix[0, 2])  # sizes 1 vs 5
        print(f"  criterion 6 detail: M(1,2)={near:.3f} M(1,5)={far:.3f}")
        c["ok"] = far > near


def test_criterion_7_loss_oracles():
    with criterion(7, "losses-match-naive-loop-oracles") as c:
        k = cam16()
        cam = (k.fx, k.fy, k.u0, k.v0)
        gaps = {}

        pred, gt = random_pair_16(21)
        ts = sample_triplets(
            gt, k, SamplingConfig(n_groups=300, seed=4, theta_m=0.3)
        )
        rep = vn_loss(pred, gt, k, ts, ohem_keep=1.0)
        nv = naive_vn_loss(pred.values, gt.values, cam, ts.triplets, 1.0)
        gaps["vn"] = abs(rep.value - nv)
        rep_h = vn_loss(pred, gt, k, ts, ohem_keep=0.5)
        nv_h = naive_vn_loss(pred.values, gt.values, cam, ts.triplets, 0.5)
        gaps["vn_ohem"] = abs(rep_h.value - nv_h)

        ps = sample_pairs(gt, k, n_pairs=300, seed=5, theta_m=0.3)
        rep = pairwise_loss(pred, gt, k, ps)
        gaps["pairwise"] = abs(
            rep.value - naive_pairwise_loss(pred.values, gt.values, cam, ps.pairs)
        )

        rng = np.random.default_rng(6)
        base = 2.0 + 0.3 * rng.uniform(size=(12, 12))
        sn_gt = DepthMap.from_values(base)
        sn_pred = DepthMap.from_values(
            base * (1.0 + 0.05 * rng.uniform(-1.0, 1.0, size=(12, 12)))
        )
        rep = surface_normal_loss(sn_pred, sn_gt, k, patch_half_size=1)
        nv, nn = naive_surface_normal_loss(
            sn_pred.values, sn_gt.values, sn_gt.mask, cam, 1
        )
        gaps["surface_normal"] = abs(rep.value - nv)
        assert rep.n_effective == nn

        b = DepthBinning(d_min=0.7, d_max=9.0, n_bins=12)
        logits = rng.normal(0.0, 2.0, size=(16, 16, 12))
        rep = wce_loss(logits, gt, b, ig_sigma=0.5)
        nv, _ = naive_wce_loss(
            logits, gt.values, gt.mask, 0.7, 9.0, 12, 0.5
        )
        gaps["wce"] = abs(rep.value - nv)

        comb = combined_loss(
            logits, pred, gt, k, ts, b, lam=5.0, ohem_keep=0.5
        )
        sum_exact = comb.value == comb.wce.value + 5.0 * comb.vn.value

        detail = " ".join(f"{name}={gap:.2e}" for name, gap in gaps.items())
        print(f"  criterion 7 detail: {detail} combined_exact={sum_exact}")
        c["ok"] = all(gap < ORACLE_TOL for gap in gaps.values()) and sum_exact


def test_criterion_8_io_and_geometry_oracle(tmp_path):
    with criterion(8, "file-roundtrips-and-cross-product-oracle") as c:
        rng = np.random.default_rng(31)
        arr = rng.uniform(-5.0, 5.0, (17, 13)).astype(np.float32)
        p = tmp_path / "x.pfm"
        write_pfm(p, arr)
        pfm_ok = np.array_equal(read_pfm(p).astype(np.float32), arr)

        pts = rng.uniform(-2.0, 2.0, (500, 3))
        cloud = PointCloud(points=pts)
        ply_ok = True
        for mode in ("ascii", "binary_le"):
            path = tmp_path / f"c_{mode}.ply"
            write_ply(cloud, None, path, mode=mode)
            props, rows = read_ply(path)
            got = np.array(rows, dtype=np.float64).astype(np.float32)
            if props != ["x", "y", "z"] or not np.array_equal(
                got, pts.astype(np.float32)
            ):
                ply_ok = False

        worst = 0.0
        n_checked = 0
        tri_pts = rng.uniform(-1.0, 1.0, (1000, 3, 3))
        for a, b_, c_ in tri_pts:
            want = naive_triangle_normal(tuple(a), tuple(b_), tuple(c_))
            if want is None:
                continue
            got = triangle_normal(a, b_, c_)
            worst = max(worst, float(np.max(np.abs(got - np.array(want)))))
            n_checked += 1
        print(
            f"  criterion 8 detail: pfm_ok={pfm_ok} ply_ok={ply_ok} "
            f"normals checked={n_checked} worst gap {worst:.2e}"
        )
        c["ok"] = (
            pfm_ok and ply_ok and n_checked >= 990 and worst < ORACLE_TOL
        )
