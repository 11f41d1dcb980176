"""Gravitational-feature-function denoiser used as the comparison baseline.

The method scores every point by a gravity-style statistic built from its
fixed-radius neighbor count and its distance to the cloud centroid, then
keeps points whose score clears a global adaptive threshold. The search
radius and threshold mix units, so the retained set depends on the
absolute scale of the input; it is implemented exactly as defined and no
scale invariance is claimed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud, bounding_box, centroid
from .errors import EmptyCloudError

__all__ = ["BaselineParams", "search_radius", "baseline_denoise"]


@dataclass(frozen=True)
class BaselineParams:
    """Tunables of the baseline method.

    G is the gravitational-constant magnitude knob; alpha_threshold is the
    experiential weight that scales the global retention threshold.
    """

    G: float = 6.67e-11
    alpha_threshold: float = 600.0

    def __post_init__(self):
        if self.G <= 0:
            raise ValueError("G must be positive")
        if self.alpha_threshold <= 0:
            raise ValueError("alpha_threshold must be positive")


def search_radius(cloud) -> float:
    """Neighborhood radius ``6 (HxHy + HxHz + HyHz) / N``.

    Dimensionally an area per point; kept verbatim. Degenerate boxes give
    R = 0, in which case neighbor counts only see coincident points.
    """
    pts = cloud.xyz if hasattr(cloud, "xyz") else np.asarray(cloud, dtype=np.float64)
    n = pts.shape[0]
    if n == 0:
        raise EmptyCloudError("search_radius of an empty cloud")
    hx, hy, hz = pts.max(axis=0) - pts.min(axis=0)
    return float(6.0 * (hx * hy + hx * hz + hy * hz) / n)


def baseline_denoise(cloud: PointCloud, params: BaselineParams | None = None) -> np.ndarray:
    """Retained original ids under the gravitational-feature criterion.

    For each point: d is the distance to the centroid, n the number of
    points (self included) within the search radius, F = G*n/d**2, and the
    point survives when F >= T/d with T = alpha*G*(Hx+Hy+Hz)/N. Points
    coincident with the centroid (d = 0) are retained unconditionally.
    """
    params = params or BaselineParams()
    if len(cloud) == 0:
        raise EmptyCloudError("cannot denoise an empty cloud")
    pts = cloud.xyz
    n_total = len(cloud)

    theta = centroid(cloud)
    box = bounding_box(cloud)
    radius = search_radius(cloud)
    d = np.linalg.norm(pts - theta, axis=1)
    counts = cKDTree(pts).query_ball_point(pts, radius, return_length=True)

    threshold = params.alpha_threshold * params.G * float(box.extents.sum()) / n_total
    keep = np.empty(n_total, dtype=bool)
    at_center = d == 0.0
    keep[at_center] = True
    dd = d[~at_center]
    # F >= T/d  <=>  G*n/d**2 >= T/d, evaluated as written.
    keep[~at_center] = params.G * counts[~at_center] / dd**2 >= threshold / dd
    return cloud.ids[keep]
