"""Dual-weight gravitational scoring and top-fraction candidate selection.

Each candidate accumulates, over its nearest neighbors, the product of a
density weight (median-normalized so scores align across leaves), an
adaptive Gaussian distance weight (bandwidth tied to the local k-th
neighbor radius), and an inverse-square kernel. The highest-scoring
fraction of candidates survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .prefilter import DensityField

__all__ = [
    "GravityWeights",
    "density_weight",
    "distance_weight",
    "gravity_kernel",
    "weighted_scores",
    "select_top",
    "top_count",
]


@dataclass(frozen=True)
class GravityWeights:
    """Scoring parameters resolved for one candidate set."""

    rho_med: float
    alpha: float = 1.0
    sigma: float = 1.0
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def density_weight(rho_i, rho_j, rho_med: float, alpha: float, epsilon: float):
    """Pairwise density weight ``(rho_i * rho_j / (rho_med**2 + eps))**(alpha/2)``."""
    return (rho_i * rho_j / (rho_med**2 + epsilon)) ** (alpha / 2.0)


def distance_weight(d, r_k_i, sigma: float):
    """Gaussian falloff with per-point bandwidth ``sigma * r_k_i``."""
    bw = sigma * r_k_i
    return np.exp(-(np.asarray(d, dtype=np.float64) ** 2) / (2.0 * bw**2))


def gravity_kernel(d, epsilon: float):
    """Regularized inverse-square kernel ``1 / (d**2 + eps)``."""
    return 1.0 / (np.asarray(d, dtype=np.float64) ** 2 + epsilon)


def weighted_scores(
    field: DensityField,
    weights: GravityWeights,
    member_ids: np.ndarray | None = None,
) -> np.ndarray:
    """Gravitational score for each candidate row of ``field``.

    When ``member_ids`` is given, the score for candidate ``i`` sums only
    over neighbors that are themselves members (the reuse-and-restrict
    policy after density filtering); dropped neighbors simply contribute
    nothing. A candidate with no surviving neighbors scores 0.
    """
    n = len(field)
    if n == 0:
        return np.zeros(0)
    # Neighbor ids always come from the field's own candidate set.
    sorter = np.argsort(field.ids, kind="stable")
    pos = sorter[np.searchsorted(field.ids, field.neighbor_ids, sorter=sorter)]
    rho_j = field.rho[pos]
    if member_ids is not None:
        alive = np.isin(field.neighbor_ids, member_ids)
    else:
        alive = np.ones_like(field.neighbor_ids, dtype=bool)

    d = field.neighbor_dist
    w_den = density_weight(
        field.rho[:, None], rho_j, weights.rho_med, weights.alpha, weights.epsilon
    )
    r_k = np.maximum(field.r_k, weights.epsilon)  # coincident-point clamp
    w_dis = distance_weight(d, r_k[:, None], weights.sigma)
    kern = gravity_kernel(d, weights.epsilon)
    return np.where(alive, w_den * w_dis * kern, 0.0).sum(axis=1)


def top_count(n_candidates: int, keep_fraction: float) -> int:
    """Number of candidates retained: ``ceil(keep_fraction * n)``.

    The product is rounded to 9 decimals before the ceiling so that exact
    decimal fractions (0.5 * 10 -> 5) are not bumped up by float dust.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError("keep fraction must be in (0, 1]")
    if n_candidates < 0:
        raise ValueError("candidate count must be >= 0")
    return min(n_candidates, math.ceil(round(keep_fraction * n_candidates, 9)))


def select_top(ids: np.ndarray, scores: np.ndarray, keep_fraction: float) -> np.ndarray:
    """Ids of the ``ceil(keep_fraction * n)`` highest-scoring candidates.

    Score ties break toward the smaller original id; the result is sorted
    by ascending id.
    """
    ids = np.asarray(ids, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if ids.shape != scores.shape:
        raise ValueError("ids and scores must have equal length")
    m = top_count(ids.size, keep_fraction)
    order = np.lexsort((ids, -scores))
    return np.sort(ids[order[:m]])
