"""Depth-map geometry toolkit.

Back-projects depth maps into camera-frame point clouds and builds on
that geometry: reproducible constrained triplet sampling, a triplet
cross-product normal loss with analytic depth gradients, plane-fit
surface normal recovery, depth/normal evaluation metrics, point-cloud
noise-robustness experiments, gradient-descent depth refinement, scene
synthesis, and file I/O (PFM, 16-bit PNG, PLY, JSON, CSV).
"""

from .errors import (
    DegenerateFitError,
    DegenerateTriangleError,
    EmptySampleError,
    FileFormatError,
    InvalidDepthError,
    RefinementDiverged,
    ShapeMismatchError,
    UnderfullSampleError,
    VnkitError,
)
from .fileio import (
    format_csv_table,
    read_depth,
    read_intrinsics,
    read_normal_map,
    read_pfm,
    read_triplets_csv,
    report_json_line,
    write_depth,
    write_intrinsics,
    write_normal_map,
    write_pfm,
    write_ply,
    write_triplets_csv,
)
from .geometry import (
    EPS_DEGENERATE,
    CameraIntrinsics,
    DepthMap,
    PointCloud,
    angle_deg,
    angles_deg,
    backproject_grid,
    backproject_map,
    backproject_pixel,
    triangle_normal,
    triangle_normals,
)
from .losses import (
    CombinedLossReport,
    DepthBinning,
    LossReport,
    combined_loss,
    dequantize_bin,
    ohem_filter,
    pairwise_loss,
    quantize_depth,
    surface_normal_loss,
    vn_loss,
    vn_loss_grad,
    wce_loss,
)
from .metrics import (
    DepthMetricsReport,
    NormalMetricsReport,
    depth_metrics,
    normal_metrics,
)
from .noiselab import (
    NoiseConfig,
    add_gaussian_noise,
    make_sphere,
    vn_sn_robustness,
)
from .normals import (
    NormalMap,
    estimate_normal_map,
    patch_normal,
    patch_size_sensitivity,
)
from .reduction import chunked_mean, chunked_sum
from .refine import RefineConfig, refine_depth
from .sampling import (
    PairSet,
    SamplingConfig,
    TripletSet,
    restriction_mask,
    sample_pairs,
    sample_triplets,
    satisfies_r1,
    satisfies_r2,
)
from .scenes import (
    PlaneSurface,
    SceneSpec,
    SphereSurface,
    standard_noisy_scene,
    standard_scene,
    synthesize_scene,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "VnkitError",
    "ShapeMismatchError",
    "InvalidDepthError",
    "DegenerateTriangleError",
    "DegenerateFitError",
    "EmptySampleError",
    "UnderfullSampleError",
    "RefinementDiverged",
    "FileFormatError",
    "EPS_DEGENERATE",
    "CameraIntrinsics",
    "DepthMap",
    "PointCloud",
    "backproject_pixel",
    "backproject_grid",
    "backproject_map",
    "triangle_normal",
    "triangle_normals",
    "angle_deg",
    "angles_deg",
    "SamplingConfig",
    "TripletSet",
    "PairSet",
    "satisfies_r1",
    "satisfies_r2",
    "restriction_mask",
    "sample_triplets",
    "sample_pairs",
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
    "NormalMap",
    "patch_normal",
    "estimate_normal_map",
    "patch_size_sensitivity",
    "DepthMetricsReport",
    "NormalMetricsReport",
    "depth_metrics",
    "normal_metrics",
    "NoiseConfig",
    "make_sphere",
    "add_gaussian_noise",
    "vn_sn_robustness",
    "RefineConfig",
    "refine_depth",
    "PlaneSurface",
    "SphereSurface",
    "SceneSpec",
    "synthesize_scene",
    "standard_scene",
    "standard_noisy_scene",
    "chunked_sum",
    "chunked_mean",
    "read_pfm",
    "write_pfm",
    "read_depth",
    "write_depth",
    "read_normal_map",
    "write_normal_map",
    "write_ply",
    "read_intrinsics",
    "write_intrinsics",
    "read_triplets_csv",
    "write_triplets_csv",
    "format_csv_table",
    "report_json_line",
]
