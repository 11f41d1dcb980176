"""Scikit-learn style estimator wrappers around the denoising pipelines.

Both denoisers are transductive outlier detectors: ``fit_predict(X)``
labels each row of ``X`` with +1 (kept / inlier) or -1 (removed / noise),
following the scikit-learn outlier-detection convention. ``get_params`` /
``set_params`` work as usual, so the classes compose with model-selection
utilities.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin

from .baseline import BaselineParams, baseline_denoise
from .cloud import PointCloud
from .pipeline import DenoiseParams, StageToggle, denoise
from .validation import check_points

__all__ = ["AdaptiveGravityDenoiser", "GravityThresholdDenoiser"]


class AdaptiveGravityDenoiser(OutlierMixin, BaseEstimator):
    """Octree-partitioned dual-weight gravitational denoiser.

    Parameters mirror :class:`~gravclean.pipeline.DenoiseParams` plus the
    stage toggles. After ``fit`` the instance exposes ``labels_`` (+1/-1),
    ``inlier_indices_`` (row indices kept) and ``report_``.
    """

    def __init__(
        self,
        max_leaf_points: int = 8000,
        min_leaf_edge_fraction: float = 1.0 / 64.0,
        beta: float = 1.6,
        min_vox_count: int = 4,
        k: int = 12,
        q: float = 0.05,
        alpha: float = 1.0,
        sigma: float = 1.0,
        lam: float = 0.9995,
        epsilon: float = 1e-12,
        recompute_knn: bool = False,
        global_median: bool = False,
        use_octree: bool = True,
        a1_voxel: bool = True,
        a2_density: bool = True,
        a3_gravity: bool = True,
        threads: int = 1,
    ):
        self.max_leaf_points = max_leaf_points
        self.min_leaf_edge_fraction = min_leaf_edge_fraction
        self.beta = beta
        self.min_vox_count = min_vox_count
        self.k = k
        self.q = q
        self.alpha = alpha
        self.sigma = sigma
        self.lam = lam
        self.epsilon = epsilon
        self.recompute_knn = recompute_knn
        self.global_median = global_median
        self.use_octree = use_octree
        self.a1_voxel = a1_voxel
        self.a2_density = a2_density
        self.a3_gravity = a3_gravity
        self.threads = threads

    def _params(self) -> DenoiseParams:
        return DenoiseParams(
            max_leaf_points=self.max_leaf_points,
            min_leaf_edge_fraction=self.min_leaf_edge_fraction,
            beta=self.beta,
            min_vox_count=self.min_vox_count,
            k=self.k,
            q=self.q,
            alpha=self.alpha,
            sigma=self.sigma,
            lam=self.lam,
            epsilon=self.epsilon,
            recompute_knn=self.recompute_knn,
            global_median=self.global_median,
        )

    def _toggles(self) -> StageToggle:
        return StageToggle(
            use_octree=self.use_octree,
            a1_voxel=self.a1_voxel,
            a2_density=self.a2_density,
            a3_gravity=self.a3_gravity,
        )

    def fit(self, X, y=None):
        pts = check_points(X)
        cloud = PointCloud(pts)
        kept, report = denoise(
            cloud, self._params(), self._toggles(), threads=self.threads
        )
        labels = np.full(len(cloud), -1, dtype=int)
        labels[kept.ids] = 1
        self.labels_ = labels
        self.inlier_indices_ = np.asarray(kept.ids)
        self.report_ = report
        self.n_features_in_ = 3
        return self

    def fit_predict(self, X, y=None):
        """+1 for retained rows, -1 for removed rows of ``X``."""
        return self.fit(X).labels_


class GravityThresholdDenoiser(OutlierMixin, BaseEstimator):
    """Whole-cloud gravitational-feature baseline denoiser.

    Scores every point with a fixed-radius neighbor count over squared
    centroid distance and thresholds globally. Sensitive to the absolute
    coordinate scale by construction.
    """

    def __init__(self, G: float = 6.67e-11, alpha_threshold: float = 600.0):
        self.G = G
        self.alpha_threshold = alpha_threshold

    def fit(self, X, y=None):
        pts = check_points(X)
        cloud = PointCloud(pts)
        kept = baseline_denoise(
            cloud, BaselineParams(G=self.G, alpha_threshold=self.alpha_threshold)
        )
        labels = np.full(len(cloud), -1, dtype=int)
        labels[kept] = 1
        self.labels_ = labels
        self.inlier_indices_ = np.asarray(kept)
        self.n_features_in_ = 3
        return self

    def fit_predict(self, X, y=None):
        """+1 for retained rows, -1 for removed rows of ``X``."""
        return self.fit(X).labels_
