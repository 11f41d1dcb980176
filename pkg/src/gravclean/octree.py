"""Recursive octree partitioning of a cloud into independent leaf index sets.

Each leaf is later denoised on its own, so the partition must be exact
(disjoint leaves covering every input id) and deterministic (fixed
depth-first child order) regardless of how many workers consume it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import Aabb, PointCloud, bounding_box
from .errors import EmptyCloudError

__all__ = ["Leaf", "LeafPartition", "partition"]


@dataclass(frozen=True)
class Leaf:
    """A terminal octree cell: member ids plus the tight box of the members.

    The box is the bounding box of the contained points, not the octree
    cell bounds; the adaptive voxel size downstream is derived from the
    actual point distribution.
    """

    ids: np.ndarray
    box: Aabb

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        ids.flags.writeable = False
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return self.ids.shape[0]

    @property
    def volume(self) -> float:
        return self.box.volume


@dataclass(frozen=True)
class LeafPartition:
    """Ordered list of leaves produced by :func:`partition`."""

    leaves: tuple[Leaf, ...]

    def __iter__(self):
        return iter(self.leaves)

    def __len__(self) -> int:
        return len(self.leaves)

    def __getitem__(self, i) -> Leaf:
        return self.leaves[i]


def partition(
    cloud: PointCloud,
    max_leaf_points: int,
    min_leaf_edge_fraction: float,
) -> LeafPartition:
    """Split a cloud into octree leaves.

    The root cell is the cloud's bounding box. A cell is split 8-ways at its
    center until it holds at most ``max_leaf_points`` points or its longest
    edge is no larger than ``min_leaf_edge_fraction`` times the root
    diagonal. The edge bound guards against infinite recursion on coincident
    points, which therefore stay together in one leaf. Children are visited
    in fixed octant order (x-high bit 2, y-high bit 1, z-high bit 0), making
    the leaf sequence deterministic.

    Cell membership uses half-open intervals per axis: a point belongs to
    the upper child when its coordinate is >= the cell midpoint.
    """
    if len(cloud) == 0:
        raise EmptyCloudError("cannot partition an empty cloud")
    if max_leaf_points < 1:
        raise ValueError("max_leaf_points must be >= 1")
    if not 0.0 < min_leaf_edge_fraction < 1.0:
        raise ValueError("min_leaf_edge_fraction must be in (0, 1)")

    root = bounding_box(cloud)
    min_edge = min_leaf_edge_fraction * root.diagonal
    pts = cloud.xyz
    ids = cloud.ids

    leaves: list[Leaf] = []
    # Stack of (positional indices, cell lo, cell hi); LIFO with children
    # pushed in reverse gives depth-first traversal in octant order.
    stack = [(np.arange(len(cloud)), root.lo, root.hi)]
    while stack:
        index, lo, hi = stack.pop()
        edge = float(np.max(hi - lo))
        if index.size <= max_leaf_points or edge <= min_edge:
            member_ids = ids[index]
            order = np.argsort(member_ids, kind="stable")
            sub = pts[index]
            leaves.append(Leaf(member_ids[order], Aabb(sub.min(0), sub.max(0))))
            continue
        mid = 0.5 * (lo + hi)
        sub = pts[index]
        octant = (
            ((sub[:, 0] >= mid[0]).astype(np.int8) << 2)
            | ((sub[:, 1] >= mid[1]).astype(np.int8) << 1)
            | (sub[:, 2] >= mid[2]).astype(np.int8)
        )
        for child in range(7, -1, -1):
            mask = octant == child
            if not mask.any():
                continue
            clo = np.where([child & 4, child & 2, child & 1], mid, lo)
            chi = np.where([child & 4, child & 2, child & 1], hi, mid)
            stack.append((index[mask], clo, chi))
    return LeafPartition(tuple(leaves))
