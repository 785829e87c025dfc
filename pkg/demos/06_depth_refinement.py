# coding: utf-8

# # Does the virtual-normal term buy better geometry?
#
# A desk-scale stand-in for training: start from a noisy depth grid and
# descend the combined objective directly, once with the virtual-normal
# term switched off (lambda = 0, pixel loss only) and once with it on
# (lambda = 5). Pixelwise error improves either way; the question is the
# recovered 3-D structure, which the normal map makes visible.

# In[1]:

from pathlib import Path

import numpy as np

from vnkit import (
    DepthMap,
    RefineConfig,
    backproject_map,
    depth_metrics,
    estimate_normal_map,
    normal_metrics,
    refine_depth,
    standard_scene,
    synthesize_scene,
    write_ply,
)

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

spec = standard_scene()
gt, gt_normals = synthesize_scene(spec)
k = spec.intrinsics


# # A corrupted starting point
#
# 3 cm of Gaussian depth noise wrecks the local surface orientation:
# the depth numbers are still within a percent or two, but fitted
# normals swing tens of degrees.

# In[2]:

rng = np.random.default_rng(100)
init = DepthMap(
    np.clip(gt.values + rng.normal(0.0, 0.03, gt.values.shape), 0.1, 20.0),
    gt.mask,
)
m0 = depth_metrics(init, gt)
n0 = normal_metrics(estimate_normal_map(init, k, 2), gt_normals)
print("start: rel %.5f, normal mean %.2f deg" % (m0.rel, n0.mean_deg))


# # Two descents
#
# Same initialization, same step schedule, same triplet refresh stream;
# only lambda differs. History rows record (step, pixel, vn, total) so
# the descent is auditable.

# In[3]:

results = {}
for lam in (0.0, 5.0):
    cfg = RefineConfig(steps=200, step_size=0.05, lambda_vn=lam, seed=9, n_triplets=2000)
    refined, history = refine_depth(init, gt, k, cfg)
    results[lam] = refined
    m = depth_metrics(refined, gt)
    n = normal_metrics(estimate_normal_map(refined, k, 2), gt_normals)
    print(
        "lambda %.0f: rel %.5f, normal mean %6.2f deg, final total %.6f"
        % (lam, m.rel, n.mean_deg, history[-1, 3])
    )


# # What the numbers say
#
# Both runs drive pixel error down, but only the lambda = 5 run repairs
# the surfaces: its recovered normals land several times closer to the
# analytic ground truth at equal-or-better pixelwise error. Orientation
# is exactly the structure a pointwise loss cannot see.

# In[4]:

for tag, dm in (("before", init), ("lambda0", results[0.0]), ("lambda5", results[5.0])):
    n = normal_metrics(estimate_normal_map(dm, k, 2), gt_normals)
    print(
        "%8s: mean %6.2f deg, within 11.25 deg %5.1f%%, within 30 deg %5.1f%%"
        % (tag, n.mean_deg, 100 * n.pct_11_25, 100 * n.pct_30)
    )


# # Look at it
#
# Clouds before and after (with their estimated normals) drop into any
# mesh viewer; the lambda = 5 surface is visibly flatter on the planes
# and rounder on the sphere cap.

# In[5]:

for tag, dm in (("before", init), ("after", results[5.0])):
    path = OUT / ("refine_%s.ply" % tag)
    write_ply(backproject_map(dm, k), estimate_normal_map(dm, k, 2), path)
    print("wrote", path)
