"""Point-cloud container and whole-cloud geometric statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCloudError
from .validation import check_ids, check_labels, check_points

__all__ = ["Aabb", "PointCloud", "bounding_box", "centroid"]


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box.

    ``lo``/``hi`` are the component-wise extrema; extents and diagonal are
    derived. Degenerate boxes (zero extent on one or more axes) are valid.
    """

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        if np.any(hi < lo):
            raise ValueError(f"invalid box: hi < lo ({lo} .. {hi})")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def extents(self) -> np.ndarray:
        """Per-axis side lengths (H_x, H_y, H_z)."""
        return self.hi - self.lo

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extents))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def expanded(self, factor: float) -> "Aabb":
        """Box scaled by ``factor`` about its center."""
        c = self.center
        half = 0.5 * self.extents * factor
        return Aabb(c - half, c + half)


@dataclass(frozen=True)
class PointCloud:
    """An ordered set of 3-D points with stable ids and optional noise labels.

    ``ids`` are assigned once (load or construction time) and preserved by
    every filtering operation, so downstream evaluation never has to match
    points by coordinates. ``labels`` is a parallel bool channel where True
    marks a known/injected noise point.

    Instances are immutable; the underlying arrays are marked read-only and
    may be shared freely across worker threads.
    """

    xyz: np.ndarray
    labels: np.ndarray | None = None
    ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = check_points(self.xyz, allow_empty=True)
        n = pts.shape[0]
        ids = (
            np.arange(n, dtype=np.int64)
            if self.ids is None
            else check_ids(self.ids, n)
        )
        labels = None if self.labels is None else check_labels(self.labels, n)
        for arr in (pts, ids) + (() if labels is None else (labels,)):
            arr.flags.writeable = False
        object.__setattr__(self, "xyz", pts)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def take(self, index) -> "PointCloud":
        """Sub-cloud at the given positional index, preserving ids and labels."""
        index = np.asarray(index)
        return PointCloud(
            self.xyz[index],
            None if self.labels is None else self.labels[index],
            self.ids[index],
        )

    def select_ids(self, keep_ids) -> "PointCloud":
        """Sub-cloud containing exactly the given original ids, in id order."""
        keep = np.asarray(keep_ids, dtype=np.int64)
        order = np.argsort(self.ids, kind="stable")
        pos = order[np.searchsorted(self.ids, np.sort(keep), sorter=order)]
        return self.take(np.sort(pos))

    @property
    def noise_count(self) -> int:
        return 0 if self.labels is None else int(self.labels.sum())


def bounding_box(cloud) -> Aabb:
    """Tight axis-aligned bounding box of a non-empty cloud.

    Raises
    ------
    EmptyCloudError
        If the cloud has no points.
    """
    pts = check_points(cloud, name="cloud")
    if pts.shape[0] == 0:
        raise EmptyCloudError("cannot bound an empty cloud")
    return Aabb(pts.min(axis=0), pts.max(axis=0))


def centroid(cloud) -> np.ndarray:
    """Arithmetic mean position of a non-empty cloud."""
    pts = check_points(cloud, name="cloud")
    if pts.shape[0] == 0:
        raise EmptyCloudError("cannot take the centroid of an empty cloud")
    return pts.mean(axis=0)
