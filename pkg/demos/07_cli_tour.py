# coding: utf-8

# # The command line, end to end
#
# Everything in the library is reachable from the `vnkit` console
# script, and every artifact a subcommand writes embeds the flags that
# produced it, so runs reproduce from their outputs alone. This tour
# renders a scene, samples triplets, scores a perturbed copy, and
# refines it back, all through subprocess calls.

# In[1]:

import json
import subprocess
import sys
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent / "out" / "cli"
OUT.mkdir(parents=True, exist_ok=True)

CLI = [sys.executable, "-m", "vnkit.cli"]


def run(*argv):
    proc = subprocess.run(
        CLI + [str(a) for a in argv], capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise RuntimeError(proc.stderr)
    return proc.stdout


# # Render fixtures
#
# `synth` writes the depth map (PFM), analytic normals (PFM), intrinsics
# (JSON), and the scene description itself, which `--spec` can replay.

# In[2]:

scene_dir = OUT / "scene"
print(run("synth", "--preset", "standard", "--out-dir", scene_dir), end="")
for f in sorted(scene_dir.iterdir()):
    print("  ", f.name)

depth = scene_dir / "depth.pfm"
cam = scene_dir / "intrinsics.json"
gt_normals = scene_dir / "normals.pfm"


# # Clouds and normal maps
#
# `backproject` emits a PLY (optionally with plane-fit normals);
# `normals` writes the estimated normal map; `eval-normals` scores it
# against the analytic one.

# In[3]:

print(run("backproject", depth, "--intrinsics", cam, "--out", OUT / "cloud.ply", "--with-normals"), end="")
print(run("normals", depth, "--intrinsics", cam, "--out", OUT / "est_normals.pfm"), end="")
report = json.loads(run("eval-normals", OUT / "est_normals.pfm", gt_normals))
print("estimated vs analytic: mean %.3f deg" % report["mean_deg"])


# # Sample, score, differentiate
#
# `sample` writes a triplet CSV whose comment lines echo the science
# flags; `vn-loss` consumes it (or samples internally), emits a JSON
# report line, and can write the per-pixel gradient as a PFM.

# In[4]:

triplets = OUT / "triplets.csv"
run("sample", depth, "--intrinsics", cam, "--n", 3000, "--seed", 5, "--out", triplets)
print("triplet CSV header:")
for line in triplets.read_text().splitlines()[:5]:
    print("  ", line)


# In[5]:

rng = np.random.default_rng(2)
from vnkit import DepthMap, read_depth, read_intrinsics, write_depth

k = read_intrinsics(cam)
gt_map = read_depth(depth, "pfm", k)
noisy = DepthMap(
    np.clip(gt_map.values + rng.normal(0.0, 0.02, gt_map.values.shape), 0.1, None),
    gt_map.mask,
)
noisy_path = OUT / "noisy.pfm"
write_depth(noisy_path, noisy, "pfm", k)

report = json.loads(
    run("vn-loss", noisy_path, depth, "--intrinsics", cam,
        "--triplets", triplets, "--grad-out", OUT / "grad.pfm")
)
print("vn loss %.6f over %d triplets" % (report["value"], report["n_effective"]))
print("flags echoed in the report:", sorted(report["flags"]))


# # Metrics and refinement
#
# `eval-depth` prints the standard seven depth metrics; `refine` runs
# the gradient descent and leaves refined depth, loss history, and
# before/after clouds in its output directory.

# In[6]:

report = json.loads(run("eval-depth", noisy_path, depth, "--intrinsics", cam))
print("before refine: rel %.5f delta1 %.4f" % (report["rel"], report["delta1"]))

refine_dir = OUT / "refined"
print(run("refine", noisy_path, depth, "--intrinsics", cam,
          "--steps", 60, "--lr", 0.05, "--lambda", 5, "--seed", 1,
          "--n-triplets", 1500, "--out-dir", refine_dir), end="")

report = json.loads(run("eval-depth", refine_dir / "refined.pfm", depth, "--intrinsics", cam))
print("after refine:  rel %.5f delta1 %.4f" % (report["rel"], report["delta1"]))
for f in sorted(refine_dir.iterdir()):
    print("  ", f.name)


# # The robustness table
#
# `noise-lab` runs the sphere experiment at reduced scale and prints a
# CSV table; the same flags at default scale reproduce the full result.

# In[7]:

print(run("noise-lab", "--sigmas", "0.001,0.003,0.01",
          "--n-groups", 5000, "--n-sn-points", 5000,
          "--n-cloud-points", 20000, "--seed", 0), end="")
