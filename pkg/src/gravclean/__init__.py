"""gravclean: gravitational point-cloud denoising.

An octree-partitioned denoising pipeline (adaptive voxel gating, kNN
density filtering, dual-weight gravitational scoring) together with the
gravitational-feature baseline, labeled noise injection, and evaluation
metrics (precision/recall/F1, PSNR, Chamfer distance, Cohen's kappa).
"""

from .baseline import BaselineParams, baseline_denoise, search_radius
from .cloud import Aabb, PointCloud, bounding_box, centroid
from .errors import (
    CloudParseError,
    DegenerateLeafError,
    EmptyCloudError,
    GravcleanError,
)
from .estimators import AdaptiveGravityDenoiser, GravityThresholdDenoiser
from .gravity import (
    GravityWeights,
    density_weight,
    distance_weight,
    gravity_kernel,
    select_top,
    weighted_scores,
)
from .io import read_cloud, write_cloud
from .metrics import (
    AgreementTable,
    RemovalConfusion,
    chamfer,
    cohen_kappa,
    kappa_from_rates,
    psnr,
    removal_metrics,
)
from .noise import NoiseSpec, contaminate, inject_dense_clusters, inject_random
from .octree import Leaf, LeafPartition, partition
from .pipeline import (
    DenoiseParams,
    RunReport,
    StageToggle,
    default_ablation_grid,
    denoise,
    evaluate_run,
    run_ablation,
    run_parameter_sweep,
)
from .prefilter import (
    DensityField,
    adaptive_voxel_size,
    density_filter,
    knn_density,
    voxel_gate,
)
from .synthetic import make_sphere_shell

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "AdaptiveGravityDenoiser",
    "AgreementTable",
    "BaselineParams",
    "CloudParseError",
    "DegenerateLeafError",
    "DenoiseParams",
    "DensityField",
    "EmptyCloudError",
    "GravcleanError",
    "GravityThresholdDenoiser",
    "GravityWeights",
    "Leaf",
    "LeafPartition",
    "NoiseSpec",
    "PointCloud",
    "RemovalConfusion",
    "RunReport",
    "StageToggle",
    "adaptive_voxel_size",
    "baseline_denoise",
    "bounding_box",
    "centroid",
    "chamfer",
    "cohen_kappa",
    "contaminate",
    "default_ablation_grid",
    "denoise",
    "density_filter",
    "density_weight",
    "distance_weight",
    "evaluate_run",
    "gravity_kernel",
    "inject_dense_clusters",
    "inject_random",
    "kappa_from_rates",
    "knn_density",
    "make_sphere_shell",
    "partition",
    "psnr",
    "read_cloud",
    "removal_metrics",
    "run_ablation",
    "run_parameter_sweep",
    "search_radius",
    "select_top",
    "voxel_gate",
    "weighted_scores",
    "write_cloud",
]
