"""Synthetic contamination with ground-truth labels.

Two noise families: points drawn uniformly over the (expanded) bounding
box of the clean geometry, and compact Gaussian blobs emulating clustered
outliers. Injected points are appended after the originals with
``labels = True`` and fresh ids, so evaluation never matches coordinates.

All draws come from seeded PCG64 streams (one child stream per stage via
``SeedSequence(seed).spawn``), making output bit-reproducible for a given
(cloud, spec) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cloud import Aabb, PointCloud
from .errors import EmptyCloudError

__all__ = ["NoiseSpec", "round_half_away", "inject_random", "inject_dense_clusters", "contaminate"]


@dataclass(frozen=True)
class NoiseSpec:
    """Contamination recipe; ``seed`` fully determines the output."""

    random_ratio: float = 0.0
    dense_ratio: float = 0.0
    cluster_count: int = 3
    cluster_sigma_fraction: float = 0.02
    bbox_expand: float = 1.1
    seed: int = 0

    def __post_init__(self):
        if self.random_ratio < 0 or self.dense_ratio < 0:
            raise ValueError("noise ratios must be >= 0")
        if self.dense_ratio > 0 and self.cluster_count < 1:
            raise ValueError("cluster_count must be >= 1 when dense noise is requested")
        if self.bbox_expand <= 0:
            raise ValueError("bbox_expand must be positive")


def round_half_away(x: float) -> int:
    """Round to the nearest integer with halves away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def _clean_box(cloud: PointCloud) -> Aabb:
    """Bounding box of the unlabeled (clean) subset of the cloud."""
    if len(cloud) == 0:
        raise EmptyCloudError("cannot inject noise into an empty cloud")
    if cloud.labels is None:
        pts = cloud.xyz
    else:
        pts = cloud.xyz[~cloud.labels]
        if pts.shape[0] == 0:
            pts = cloud.xyz
    return Aabb(pts.min(axis=0), pts.max(axis=0))


def _clean_count(cloud: PointCloud) -> int:
    return len(cloud) if cloud.labels is None else int((~cloud.labels).sum())


def _append(cloud: PointCloud, extra: np.ndarray) -> PointCloud:
    n, m = len(cloud), len(extra)
    labels = np.zeros(n, dtype=bool) if cloud.labels is None else cloud.labels
    next_id = int(cloud.ids.max()) + 1 if n else 0
    return PointCloud(
        np.vstack([cloud.xyz, extra]),
        np.concatenate([labels, np.ones(m, dtype=bool)]),
        np.concatenate([cloud.ids, np.arange(next_id, next_id + m, dtype=np.int64)]),
    )


def _rng(spec: NoiseSpec, stage: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(stage,)))
    )


def inject_random(cloud: PointCloud, ratio: float, spec: NoiseSpec) -> PointCloud:
    """Add ``round(ratio * N_clean)`` points uniform over the expanded clean box."""
    if ratio < 0:
        raise ValueError("ratio must be >= 0")
    n_add = round_half_away(ratio * _clean_count(cloud))
    base = cloud if cloud.labels is not None else replace_labels(cloud)
    if n_add == 0:
        return base
    box = _clean_box(cloud).expanded(spec.bbox_expand)
    pts = _rng(spec, 0).uniform(box.lo, box.hi, size=(n_add, 3))
    return _append(base, pts)


def inject_dense_clusters(cloud: PointCloud, ratio: float, spec: NoiseSpec) -> PointCloud:
    """Add ``round(ratio * N_clean)`` points as isotropic Gaussian blobs.

    Blob centers are uniform over the expanded clean box; the common
    standard deviation is ``cluster_sigma_fraction`` times the clean box
    diagonal. Counts are split as evenly as possible, with the remainder
    going to the first clusters.
    """
    if ratio < 0:
        raise ValueError("ratio must be >= 0")
    n_add = round_half_away(ratio * _clean_count(cloud))
    base = cloud if cloud.labels is not None else replace_labels(cloud)
    if n_add == 0:
        return base
    clean = _clean_box(cloud)
    box = clean.expanded(spec.bbox_expand)
    sigma = spec.cluster_sigma_fraction * clean.diagonal
    rng = _rng(spec, 1)
    centers = rng.uniform(box.lo, box.hi, size=(spec.cluster_count, 3))
    per, rem = divmod(n_add, spec.cluster_count)
    blobs = []
    for c in range(spec.cluster_count):
        size = per + (1 if c < rem else 0)
        blobs.append(centers[c] + sigma * rng.standard_normal((size, 3)))
    return _append(base, np.vstack(blobs))


def replace_labels(cloud: PointCloud) -> PointCloud:
    """Copy of the cloud with an all-clean label channel."""
    return PointCloud(cloud.xyz, np.zeros(len(cloud), dtype=bool), cloud.ids)


def contaminate(cloud: PointCloud, spec: NoiseSpec) -> PointCloud:
    """Apply the full recipe: uniform random noise, then dense clusters."""
    out = inject_random(cloud, spec.random_ratio, spec)
    out = inject_dense_clusters(out, spec.dense_ratio, spec)
    return out
