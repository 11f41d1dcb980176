"""Evaluation metrics: removal precision/recall/F1, PSNR, Chamfer distance,
and Cohen's kappa for annotation agreement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyCloudError
from .validation import check_points

__all__ = [
    "RemovalConfusion",
    "removal_metrics",
    "psnr",
    "chamfer",
    "AgreementTable",
    "cohen_kappa",
    "kappa_from_rates",
]


@dataclass(frozen=True)
class RemovalConfusion:
    """Counts describing one denoising run against ground-truth labels.

    ``removed_noise`` (true noise among the removed), ``removed`` (total
    removed), ``noise`` (total true noise in the input).
    """

    removed_noise: int
    removed: int
    noise: int

    def __post_init__(self):
        if not 0 <= self.removed_noise <= min(self.removed, self.noise):
            raise ValueError(
                f"inconsistent confusion counts: {self.removed_noise} removed-noise, "
                f"{self.removed} removed, {self.noise} noise"
            )


def removal_metrics(conf: RemovalConfusion) -> tuple[float, float, float]:
    """(precision, recall, F1) of noise removal; 0/0 ratios resolve to 0."""
    precision = conf.removed_noise / conf.removed if conf.removed else 0.0
    recall = conf.removed_noise / conf.noise if conf.noise else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1


def _nn_sq_dist(queries: np.ndarray, targets: np.ndarray) -> np.ndarray:
    d, _ = cKDTree(targets).query(queries, k=1)
    return d**2


def psnr(clean, denoised) -> float:
    """Peak signal-to-noise ratio in dB.

    The peak M is the diagonal of the clean cloud's bounding box; the error
    is the mean squared distance from each clean point to its nearest
    denoised point. Returns ``inf`` when the error is exactly zero.
    """
    a = check_points(clean, name="clean")
    b = check_points(denoised, name="denoised")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptyCloudError("psnr requires two non-empty clouds")
    m2 = float(((a.max(axis=0) - a.min(axis=0)) ** 2).sum())
    mse = float(_nn_sq_dist(a, b).mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(m2 / mse)


def chamfer(a, b) -> float:
    """Symmetric Chamfer distance (mean squared nearest-neighbor, both ways)."""
    pa = check_points(a, name="a")
    pb = check_points(b, name="b")
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        raise EmptyCloudError("chamfer requires two non-empty clouds")
    return float(_nn_sq_dist(pa, pb).mean() + _nn_sq_dist(pb, pa).mean())


@dataclass(frozen=True)
class AgreementTable:
    """Two-annotator binary agreement counts.

    The disagreement total splits into the two off-diagonal cells so that
    both annotators' marginal label proportions are recoverable.
    """

    agree_signal: int
    agree_noise: int
    a_signal_b_noise: int
    a_noise_b_signal: int

    def __post_init__(self):
        cells = (
            self.agree_signal,
            self.agree_noise,
            self.a_signal_b_noise,
            self.a_noise_b_signal,
        )
        if any(c < 0 for c in cells):
            raise ValueError("agreement counts must be >= 0")

    @property
    def disagree(self) -> int:
        return self.a_signal_b_noise + self.a_noise_b_signal

    @property
    def total(self) -> int:
        return self.agree_signal + self.agree_noise + self.disagree

    @classmethod
    def from_labels(cls, a_noise, b_noise) -> "AgreementTable":
        """Build the table from two boolean noise-label vectors."""
        a = np.asarray(a_noise, dtype=bool)
        b = np.asarray(b_noise, dtype=bool)
        if a.shape != b.shape:
            raise ValueError("label vectors must have equal length")
        return cls(
            agree_signal=int((~a & ~b).sum()),
            agree_noise=int((a & b).sum()),
            a_signal_b_noise=int((~a & b).sum()),
            a_noise_b_signal=int((a & ~b).sum()),
        )


def cohen_kappa(table: AgreementTable) -> tuple[float, float, float]:
    """(observed agreement p0, chance agreement pe, kappa).

    Kappa is NaN when the chance agreement is exactly 1 (single-class
    marginals on both sides), where the statistic is undefined.
    """
    n = table.total
    if n == 0:
        raise EmptyCloudError("agreement table is empty")
    p0 = (table.agree_signal + table.agree_noise) / n
    a_signal = (table.agree_signal + table.a_signal_b_noise) / n
    b_signal = (table.agree_signal + table.a_noise_b_signal) / n
    pe = a_signal * b_signal + (1.0 - a_signal) * (1.0 - b_signal)
    return p0, pe, kappa_from_rates(p0, pe)


def kappa_from_rates(p0: float, pe: float) -> float:
    """Chance-corrected agreement ``(p0 - pe) / (1 - pe)``; NaN when pe = 1."""
    if pe == 1.0:
        return math.nan
    return (p0 - pe) / (1.0 - pe)
