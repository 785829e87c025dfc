# coding: utf-8

# # Recovering surface normals from depth
#
# A depth map implies a surface; fitting a plane to the back-projected
# points in a small window around each pixel recovers its normal. The
# fit is a PCA of the patch covariance: the eigenvector of the smallest
# eigenvalue is the normal, oriented toward the camera. Window size
# trades noise suppression against edge smearing, and the sensitivity
# matrix below quantifies that trade on a noisy render.

# In[1]:

from pathlib import Path

import numpy as np

from vnkit import (
    backproject_map,
    estimate_normal_map,
    normal_metrics,
    patch_normal,
    patch_size_sensitivity,
    standard_noisy_scene,
    standard_scene,
    synthesize_scene,
    write_normal_map,
)

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

spec = standard_scene()
depth, gt_normals = synthesize_scene(spec)
k = spec.intrinsics


# # One pixel, explicitly
#
# patch_normal runs the fit at a single pixel of a grid-indexed cloud.
# On a clean plane the estimate matches the analytic normal to machine
# precision.

# In[2]:

cloud = backproject_map(depth, k)
n = patch_normal(cloud, row=8, col=8, half_size=2)
ref = gt_normals.normals[8, 8]
print("estimated:", n)
print("analytic: ", ref)
print("angle gap: %.2e deg" % np.degrees(np.arccos(np.clip(np.dot(n, ref), -1, 1))))


# # The whole map
#
# estimate_normal_map vectorizes the same fit over every pixel. Border
# pixels keep their clipped windows, so a fully valid depth map yields a
# fully valid normal map. Against the analytic reference the clean scene
# is essentially exact away from surface boundaries.

# In[3]:

nm = estimate_normal_map(depth, k, half_size=2)
print("valid normals:", int(nm.valid.sum()), "of", nm.valid.size)
m = normal_metrics(nm, gt_normals)
print(
    "vs analytic: mean %.3f deg median %.3f deg, within 11.25 deg: %.1f%%"
    % (m.mean_deg, m.median_deg, 100.0 * m.pct_11_25)
)


# # Patch size on noisy depth
#
# Rendering the same scene with 5 mm depth noise and comparing normal
# maps across window half-sizes 1, 2, 5 shows the drift grow with the
# size gap: entry (a, b) is the mean angle between the size-a and size-b
# estimates. Small windows chase noise, large windows blur geometry, and
# the distance between them measures how much the choice matters.

# In[4]:

noisy_spec = standard_noisy_scene()
noisy_depth, _ = synthesize_scene(noisy_spec)
sizes = [1, 2, 5]
mat = patch_size_sensitivity(noisy_depth, noisy_spec.intrinsics, sizes)
print("half-sizes:", sizes)
for i, row in enumerate(mat):
    print("  size %d: " % sizes[i] + "  ".join("%7.3f" % v for v in row))
print("drift 1 vs 5 exceeds 1 vs 2:", mat[0, 2] > mat[0, 1])


# # Save the estimate
#
# Normal maps serialize as 3-channel PFM images; invalid pixels store
# zero vectors. The companion cloud from the first walkthrough plus this
# file reconstruct an oriented point cloud.

# In[5]:

out_path = OUT / "scene_normals.pfm"
write_normal_map(out_path, nm)
print("wrote", out_path, "(%d bytes)" % out_path.stat().st_size)
print("cloud + normals cover %d oriented points" % len(cloud))
