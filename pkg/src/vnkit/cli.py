"""Command-line surface for reproducible depth-geometry experiments.

Every output embeds the flags that produced it (CSV as ``#`` comments,
JSON under ``"flags"``) so runs can be reproduced from their artifacts.
Two kinds of flags are deliberately left out of the echo: worker counts
(results are worker-invariant by contract, and echoing them would break
byte-identity across parallel settings) and output destinations.

Exit codes: 0 success, 1 runtime failure (bad files, empty samples,
diverged runs), 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .errors import VnkitError
from .geometry import backproject_map
from .losses import vn_loss, vn_loss_grad
from .metrics import depth_metrics, normal_metrics
from .noiselab import NoiseConfig, vn_sn_robustness
from .normals import estimate_normal_map, patch_size_sensitivity
from .refine import RefineConfig, refine_depth
from .sampling import SamplingConfig, sample_triplets
from .scenes import SceneSpec, standard_noisy_scene, standard_scene, synthesize_scene

_ECHO_EXCLUDE = {"func", "command", "workers", "out", "out_dir", "grad_out"}


def _echo_pairs(args: argparse.Namespace) -> list[str]:
    pairs = []
    for key in sorted(vars(args)):
        if key in _ECHO_EXCLUDE:
            continue
        value = getattr(args, key)
        if value is None:
            continue
        pairs.append(f"{key}={fileio._fmt(value)}")
    return pairs


def _echo_dict(args: argparse.Namespace) -> dict:
    out = {}
    for key in sorted(vars(args)):
        if key in _ECHO_EXCLUDE:
            continue
        value = getattr(args, key)
        if value is None:
            continue
        out[key] = value
    return out


def _load_depth(path: str, fmt: str, k) -> "object":
    return fileio.read_depth(path, fmt, k)


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text, encoding="ascii", newline="\n")
    else:
        sys.stdout.write(text)


def _sampling_config(args) -> SamplingConfig:
    return SamplingConfig(
        n_groups=args.n,
        seed=args.seed,
        alpha_deg=args.alpha,
        beta_deg=args.beta,
        theta_m=args.theta,
        max_attempts_per_group=args.max_attempts,
    )


def cmd_backproject(args) -> int:
    k = fileio.read_intrinsics(args.intrinsics)
    depth = _load_depth(args.depth, args.format, k)
    cloud = backproject_map(depth, k)
    if len(cloud) == 0:
        print("error: no valid pixels to back-project", file=sys.stderr)
        return 1
    normals = None
    if args.with_normals:
        normals = estimate_normal_map(depth, k, args.patch_half_size)
    fileio.write_ply(cloud, normals, args.out, args.mode)
    print(
        json.dumps(
            {"points": len(cloud), "out": args.out, "flags": _echo_dict(args)}
        )
    )
    return 0


def cmd_normals(args) -> int:
    k = fileio.read_intrinsics(args.intrinsics)
    depth = _load_depth(args.depth, args.format, k)
    nm = estimate_normal_map(depth, k, args.patch_half_size)
    fileio.write_normal_map(args.out, nm)
    print(
        json.dumps(
            {
                "valid": int(np.count_nonzero(nm.valid)),
                "out": args.out,
                "flags": _echo_dict(args),
            }
        )
    )
    return 0


def cmd_sample(args) -> int:
    k = fileio.read_intrinsics(args.intrinsics)
    depth = _load_depth(args.depth, args.format, k)
    ts = sample_triplets(depth, k, _sampling_config(args), workers=args.workers)
    if ts.underfull and not args.allow_underfull:
        print(
            f"error: only {len(ts)} of {args.n} groups accepted "
            f"(attempts_used={ts.attempts_used}); pass --allow-underfull "
            "to keep the subset",
            file=sys.stderr,
        )
        return 1
    fileio.write_triplets_csv(ts, args.out, comments=_echo_pairs(args))
    print(
        json.dumps(
            {
                "accepted": len(ts),
                "attempts_used": ts.attempts_used,
                "underfull": ts.underfull,
                "out": args.out,
            }
        )
    )
    return 0


def cmd_vn_loss(args) -> int:
    k = fileio.read_intrinsics(args.intrinsics)
    pred = _load_depth(args.pred, args.format, k)
    gt = _load_depth(args.gt, args.format, k)
    if args.triplets:
        triplets = fileio.read_triplets_csv(args.triplets)
    else:
        if args.n is None or args.seed is None:
            print(
                "error: provide --triplets or both --n and --seed",
                file=sys.stderr,
            )
            return 2
        triplets = sample_triplets(gt, k, _sampling_config(args))
    if args.grad_out:
        report, grad = vn_loss_grad(pred, gt, k, triplets, args.ohem_keep)
        fileio.write_pfm(args.grad_out, grad)
    else:
        report = vn_loss(pred, gt, k, triplets, args.ohem_keep)
    _emit(
        args,
        fileio.report_json_line(report, extra={"flags": _echo_dict(args)})
        + "\n",
    )
    return 0


def cmd_eval_depth(args) -> int:
    k = fileio.read_intrinsics(args.intrinsics)
    pred = _load_depth(args.pred, args.format, k)
    gt = _load_depth(args.gt, args.format, k)
    report = depth_metrics(pred, gt, max_depth=args.max_depth)
    _emit(
        args,
        fileio.report_json_line(report, extra={"flags": _echo_dict(args)})
        + "\n",
    )
    return 0


def cmd_eval_normals(args) -> int:
    pred = fileio.read_normal_map(args.pred)
    gt = fileio.read_normal_map(args.gt)
    report = normal_metrics(pred, gt)
    _emit(
        args,
        fileio.report_json_line(report, extra={"flags": _echo_dict(args)})
        + "\n",
    )
    return 0


def cmd_noise_lab(args) -> int:
    sigmas = tuple(float(s) for s in args.sigmas.split(","))
    cfg = NoiseConfig(
        sigma_list=sigmas,
        n_vn_groups=args.n_groups,
        n_sn_points=args.n_sn_points,
        n_cloud_points=args.n_cloud_points,
        knn=args.knn,
        seed=args.seed,
    )
    table = vn_sn_robustness(cfg)
    text = fileio.format_csv_table(
        ["sigma", "vn_mean_deg", "sn_mean_deg"],
        [tuple(float(v) for v in row) for row in table],
        comments=_echo_pairs(args),
    )
    _emit(args, text)
    return 0


def cmd_patch_sensitivity(args) -> int:
    k = fileio.read_intrinsics(args.intrinsics)
    depth = _load_depth(args.depth, args.format, k)
    sizes = [int(s) for s in args.sizes.split(",")]
    matrix = patch_size_sensitivity(depth, k, sizes)
    rows = []
    for i, size in enumerate(sizes):
        rows.append((size, *[float(v) for v in matrix[i]]))
    text = fileio.format_csv_table(
        ["half_size", *[f"vs_{s}" for s in sizes]],
        rows,
        comments=_echo_pairs(args),
    )
    _emit(args, text)
    return 0


def cmd_refine(args) -> int:
    k = fileio.read_intrinsics(args.intrinsics)
    init = _load_depth(args.init, args.format, k)
    gt = _load_depth(args.gt, args.format, k)
    cfg = RefineConfig(
        steps=args.steps,
        step_size=args.lr,
        lambda_vn=getattr(args, "lambda"),
        triplet_refresh_every=args.refresh_every,
        seed=args.seed,
        n_triplets=args.n_triplets,
        d_min=args.d_min,
        d_max=args.d_max,
        theta_m=args.theta,
    )
    refined, history = refine_depth(init, gt, k, cfg)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fileio.write_depth(out_dir / "refined.pfm", refined, "pfm", k)
    hist_text = fileio.format_csv_table(
        ["step", "pixel_loss", "vn_loss", "total"],
        [(int(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in history],
        comments=_echo_pairs(args),
    )
    (out_dir / "history.csv").write_text(hist_text, encoding="ascii")
    fileio.write_ply(backproject_map(init, k), None, out_dir / "before.ply")
    fileio.write_ply(backproject_map(refined, k), None, out_dir / "after.ply")
    final = history[-1]
    print(
        json.dumps(
            {
                "steps": int(final[0]),
                "pixel_loss": float(final[1]),
                "vn_loss": float(final[2]),
                "total": float(final[3]),
                "out_dir": str(out_dir),
            }
        )
    )
    return 0


def cmd_synth(args) -> int:
    if args.spec:
        spec = SceneSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
    elif args.preset == "standard":
        spec = standard_scene()
    else:
        spec = standard_noisy_scene()
    if args.seed is not None:
        spec = SceneSpec(
            width=spec.width,
            height=spec.height,
            intrinsics=spec.intrinsics,
            planes=spec.planes,
            spheres=spec.spheres,
            d_min=spec.d_min,
            d_max=spec.d_max,
            noise_sigma=spec.noise_sigma,
            seed=args.seed,
        )
    depth, normals = synthesize_scene(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fileio.write_depth(out_dir / "depth.pfm", depth, "pfm", spec.intrinsics)
    fileio.write_normal_map(out_dir / "normals.pfm", normals)
    fileio.write_intrinsics(spec.intrinsics, out_dir / "intrinsics.json")
    (out_dir / "scene.json").write_text(spec.to_json() + "\n", encoding="ascii")
    print(
        json.dumps(
            {
                "valid_pixels": depth.n_valid,
                "out_dir": str(out_dir),
                "flags": _echo_dict(args),
            }
        )
    )
    return 0


def _add_io_flags(p, depth_args):
    for name in depth_args:
        p.add_argument(name)
    p.add_argument("--intrinsics", required=True, help="camera JSON")
    p.add_argument(
        "--format", choices=["pfm", "png16"], default="pfm", help="depth format"
    )


def _add_sampling_flags(p, require_seed: bool):
    p.add_argument("--n", type=int, required=require_seed, help="group count")
    p.add_argument("--seed", type=int, required=require_seed)
    p.add_argument("--alpha", type=float, default=120.0, help="max angle, deg")
    p.add_argument("--beta", type=float, default=30.0, help="min angle, deg")
    p.add_argument(
        "--theta", type=float, default=0.6, help="min pairwise distance, m"
    )
    p.add_argument("--max-attempts", type=int, default=200)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vnkit",
        description="depth-map geometry toolkit: back-projection, "
        "triplet-normal losses, surface normals, metrics, experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("backproject", help="depth map to PLY point cloud")
    _add_io_flags(p, ["depth"])
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["ascii", "binary_le"], default="binary_le")
    p.add_argument("--with-normals", action="store_true")
    p.add_argument("--patch-half-size", type=int, default=1)
    p.set_defaults(func=cmd_backproject)

    p = sub.add_parser("normals", help="depth map to plane-fit normal map")
    _add_io_flags(p, ["depth"])
    p.add_argument("--patch-half-size", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_normals)

    p = sub.add_parser("sample", help="sample restriction-passing triplets")
    _add_io_flags(p, ["depth"])
    _add_sampling_flags(p, require_seed=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--allow-underfull", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("vn-loss", help="triplet-normal loss between two maps")
    _add_io_flags(p, ["pred", "gt"])
    p.add_argument("--triplets", help="CSV from `sample` (else --n/--seed)")
    _add_sampling_flags(p, require_seed=False)
    p.add_argument("--ohem-keep", type=float, default=0.5)
    p.add_argument("--grad-out", help="write d(loss)/d(depth) as PFM")
    p.add_argument("--out", help="write the JSON line here instead of stdout")
    p.set_defaults(func=cmd_vn_loss)

    p = sub.add_parser("eval-depth", help="depth metrics report")
    _add_io_flags(p, ["pred", "gt"])
    p.add_argument("--max-depth", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_depth)

    p = sub.add_parser("eval-normals", help="normal metrics report")
    p.add_argument("pred", help="3-channel PFM normal map")
    p.add_argument("gt", help="3-channel PFM normal map")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_normals)

    p = sub.add_parser("noise-lab", help="sphere noise-robustness table")
    p.add_argument("--sigmas", required=True, help="comma-separated, ascending")
    p.add_argument("--n-groups", type=int, default=100_000)
    p.add_argument("--n-sn-points", type=int, default=100_000)
    p.add_argument("--n-cloud-points", type=int, default=100_000)
    p.add_argument("--knn", type=int, default=16)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_noise_lab)

    p = sub.add_parser(
        "patch-sensitivity", help="normal drift between patch sizes"
    )
    _add_io_flags(p, ["depth"])
    p.add_argument("--sizes", default="1,2,3,4,5", help="half-sizes i")
    p.add_argument("--out")
    p.set_defaults(func=cmd_patch_sensitivity)

    p = sub.add_parser("refine", help="gradient-descent depth refinement")
    _add_io_flags(p, ["init", "gt"])
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--lr", type=float, required=True)
    p.add_argument("--lambda", type=float, default=5.0, dest="lambda")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-triplets", type=int, default=2000)
    p.add_argument("--refresh-every", type=int, default=50)
    p.add_argument("--theta", type=float, default=0.6)
    p.add_argument("--d-min", type=float, default=0.1)
    p.add_argument("--d-max", type=float, default=20.0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("synth", help="render a synthetic scene to fixtures")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=["standard", "standard-noisy"])
    group.add_argument("--spec", help="SceneSpec JSON file")
    p.add_argument("--seed", type=int, default=None, help="override scene seed")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.func(args)
    except (VnkitError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
