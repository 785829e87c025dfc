# coding: utf-8

# # Why long-range triangles survive noise
#
# Perturb every point of a unit sphere with Gaussian noise and estimate
# normals two ways: from wide, long-edged triplets (the virtual-normal
# construction) and from local k-nearest-neighbor plane fits. The local
# fits degrade fast because a small neighborhood amplifies noise; the
# long edges of a constrained triplet divide it away. This run measures
# both mean angular errors across a noise sweep.

# In[1]:

from pathlib import Path

import numpy as np

from vnkit import (
    NoiseConfig,
    add_gaussian_noise,
    format_csv_table,
    make_sphere,
    vn_sn_robustness,
)

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)


# # The test surface
#
# Area-uniform random points on the unit sphere, with the exact outward
# normal P/|P| at each point as reference.

# In[2]:

cloud, ref = make_sphere(20_000, 1.0, seed=3)
radii = np.linalg.norm(cloud.points, axis=1)
print("points:", len(cloud), "radius spread: %.2e" % (radii.max() - radii.min()))
print("reference normals are the positions themselves:", bool(np.allclose(cloud.points, ref)))


# # The noise operator
#
# Isotropic Gaussian displacement from a seeded counter-based stream;
# sigma is in the same units as the cloud (here, sphere radii).

# In[3]:

noisy = add_gaussian_noise(cloud, sigma=0.01, mu=0.0, seed=3)
disp = np.linalg.norm(noisy.points - cloud.points, axis=1)
print("mean displacement: %.5f (order sigma, isotropic 3-D Gaussian)" % disp.mean())


# # The sweep
#
# Default protocol: 100k triplet groups and 100k local fits per sigma on
# a 100k-point cloud, k = 16 neighbors. Smaller numbers here keep the
# demo quick; the shape of the result is the same.

# In[4]:

cfg = NoiseConfig(
    sigma_list=(0.0002, 0.001, 0.003, 0.01),
    n_vn_groups=20_000,
    n_sn_points=20_000,
    n_cloud_points=50_000,
    seed=0,
)
table = vn_sn_robustness(cfg)
print("%10s %14s %14s" % ("sigma", "triplet (deg)", "local fit (deg)"))
for sigma, vn, sn in table:
    print("%10.4f %14.4f %14.4f" % (sigma, vn, sn))


# # Read the table
#
# Two things hold at every noise level: the triplet estimate beats the
# local fit by an order of magnitude, and both grow roughly linearly in
# sigma while the gap persists. That linearity is the small-angle
# regime: displacement over edge length.

# In[5]:

vn = table[:, 1]
sn = table[:, 2]
print("triplet always wins:", bool((vn < sn).all()))
print("ratio local/triplet:", "  ".join("%.1fx" % r for r in sn / vn))
print("growth vn:", "  ".join("%.2fx" % r for r in vn[1:] / vn[:-1]))

csv_path = OUT / "sphere_robustness.csv"
csv_path.write_text(
    format_csv_table(
        ("sigma", "vn_mean_deg", "sn_mean_deg"),
        [tuple(row) for row in table],
        comments=("unit sphere, 50k points, 20k groups/fits, seed=0",),
    )
)
print("wrote", csv_path)
