"""Candidate pre-filtering: adaptive voxel occupancy gate and kNN density.

These two stages cheaply discard clearly isolated points and low-density
points so that the gravitational scoring stage only runs on a compact
candidate set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateLeafError

__all__ = [
    "DensityField",
    "adaptive_voxel_size",
    "voxel_gate",
    "voxel_occupancy",
    "knn_density",
    "density_filter",
]


def adaptive_voxel_size(extents, n_points: int, beta: float) -> float:
    """Voxel edge length adapted to the local point spacing.

    For a full-rank box this is ``beta * (V / N)**(1/3)``. Degenerate boxes
    fall back to the same construction one dimension down: with one zero
    extent ``beta * sqrt(area / N)``, with two ``beta * (length / N)``.
    Fully degenerate (coincident) leaves return 0.0, which callers treat as
    "skip the gate".
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if beta <= 0:
        raise ValueError("beta must be positive")
    ext = np.asarray(extents, dtype=np.float64).reshape(3)
    nonzero = ext[ext > 0.0]
    if nonzero.size == 3:
        return beta * float(np.prod(nonzero) / n_points) ** (1.0 / 3.0)
    if nonzero.size == 2:
        return beta * float(np.prod(nonzero) / n_points) ** 0.5
    if nonzero.size == 1:
        return beta * float(nonzero[0]) / n_points
    return 0.0


def voxel_occupancy(points: np.ndarray, h: float, origin=None):
    """Map each point to its voxel and count occupants per voxel.

    Returns ``(keys, counts_per_point)`` where ``keys`` are integer voxel
    coordinates ``floor((p - origin) / h)`` and ``counts_per_point[i]`` is
    the occupancy of point ``i``'s voxel.
    """
    if h <= 0:
        raise ValueError("voxel size must be positive")
    pts = np.asarray(points, dtype=np.float64)
    if origin is None:
        origin = pts.min(axis=0)
    keys = np.floor((pts - origin) / h).astype(np.int64)
    _, inverse, counts = np.unique(
        keys, axis=0, return_inverse=True, return_counts=True
    )
    return keys, counts[inverse]


def voxel_gate(points: np.ndarray, h: float, min_count: int, origin=None) -> np.ndarray:
    """Boolean mask keeping points whose voxel holds at least ``min_count`` points."""
    if min_count <= 0:
        return np.ones(len(points), dtype=bool)
    _, occupancy = voxel_occupancy(points, h, origin)
    return occupancy >= min_count


@dataclass(frozen=True)
class DensityField:
    """Per-candidate kNN statistics over one leaf's candidate set.

    ``neighbor_ids``/``neighbor_dist`` hold, for each candidate, its
    ``k_eff`` nearest other candidates (original ids) with their Euclidean
    distances, sorted by (distance, id). ``r_k`` is the distance to the
    k-th neighbor and ``rho`` the resulting ball density.
    """

    ids: np.ndarray
    rho: np.ndarray
    r_k: np.ndarray
    neighbor_ids: np.ndarray
    neighbor_dist: np.ndarray

    def __len__(self) -> int:
        return self.ids.shape[0]

    @property
    def k_eff(self) -> int:
        return self.neighbor_ids.shape[1]


def _ball_density(k: int, r_k: np.ndarray, epsilon: float) -> np.ndarray:
    r = np.maximum(r_k, epsilon)
    return k / ((4.0 / 3.0) * np.pi * r**3)


def knn_density(
    points: np.ndarray,
    ids: np.ndarray,
    k: int,
    epsilon: float = 1e-12,
) -> DensityField:
    """Exact k-nearest-neighbor lists and ball densities for a candidate set.

    ``k`` is clamped to ``len(points) - 1``. Distance ties are broken by
    ascending original id, which makes the result reproducible and equal to
    a brute-force evaluation. The density is ``k_eff`` over the volume of
    the ball with radius ``max(r_k, epsilon)``.

    Raises
    ------
    DegenerateLeafError
        If fewer than two candidates are supplied.
    """
    pts = np.asarray(points, dtype=np.float64)
    ids = np.asarray(ids, dtype=np.int64)
    n = pts.shape[0]
    if n < 2:
        raise DegenerateLeafError(f"need at least 2 points, got {n}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    k_eff = min(k, n - 1)

    tree = cKDTree(pts)
    # One column for self plus one beyond the boundary to detect window
    # saturation by ties; distances are recomputed below so that ordering
    # uses one consistent arithmetic everywhere.
    m = min(n, k_eff + 2)
    _, idx = tree.query(pts, k=m)

    cand_dist = np.sqrt(((pts[idx] - pts[:, None, :]) ** 2).sum(axis=-1))
    cand_ids = ids[idx]
    self_mask = idx == np.arange(n)[:, None]
    cand_dist[self_mask] = np.inf

    order = np.argsort(cand_dist, axis=1, kind="stable")
    rows = np.arange(n)[:, None]
    d_sorted = cand_dist[rows, order]
    id_sorted = cand_ids[rows, order]

    nbr_dist = d_sorted[:, :k_eff].copy()
    nbr_ids = id_sorted[:, :k_eff].copy()

    # Rows where equal distances appear inside the window need the
    # (distance, id) tie rule; rows where the k-th distance reaches the end
    # of the query window may be missing tied candidates entirely.
    tied = (np.diff(d_sorted[:, : k_eff + 1], axis=1) == 0).any(axis=1)
    if m < n:
        # d_sorted[:, m-2] is a lower bound on the window edge (the self
        # entry occupies at most one slot), so this triggers conservatively.
        saturated = nbr_dist[:, -1] >= d_sorted[:, m - 2]
    else:
        saturated = np.zeros(n, dtype=bool)  # window covered every point
    for i in np.flatnonzero(tied | saturated):
        nbr_ids[i], nbr_dist[i] = _resolve_row(tree, pts, ids, i, k_eff)

    r_k = nbr_dist[:, -1].copy()
    rho = _ball_density(k_eff, r_k, epsilon)
    return DensityField(ids=ids, rho=rho, r_k=r_k, neighbor_ids=nbr_ids, neighbor_dist=nbr_dist)


def _resolve_row(tree, pts, ids, i, k_eff):
    """Exact (distance, id)-ordered k nearest others for one query point."""
    d_all = np.sqrt(((pts - pts[i]) ** 2).sum(axis=1))
    d_all[i] = np.inf
    # Bound the candidate set with a slightly inflated ball; fall back to
    # all points only when the tree's metric disagrees at the boundary.
    kth = np.partition(d_all, k_eff - 1)[k_eff - 1]
    cand = tree.query_ball_point(pts[i], kth * (1.0 + 1e-9) + 1e-300)
    cand = np.asarray([c for c in cand if c != i], dtype=np.int64)
    if cand.size < k_eff:
        cand = np.flatnonzero(np.isfinite(d_all))
    order = np.lexsort((ids[cand], d_all[cand]))
    chosen = cand[order[:k_eff]]
    return ids[chosen], d_all[chosen]


def density_filter(field: DensityField, q: float) -> np.ndarray:
    """Boolean mask keeping candidates at or above the q-th density percentile.

    The threshold is the linear-interpolation quantile of the candidate
    densities (position ``q/100 * (n-1)`` in the ascending sort).
    """
    if not 0.0 <= q <= 100.0:
        raise ValueError("q must be a percentile in [0, 100]")
    if len(field) == 0:
        raise ValueError("density field is empty")
    threshold = np.percentile(field.rho, q)
    return field.rho >= threshold
