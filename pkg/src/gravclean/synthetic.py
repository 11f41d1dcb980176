"""Synthetic evaluation targets for environments without the scan datasets."""

from __future__ import annotations

import numpy as np

from .cloud import PointCloud

__all__ = ["make_sphere_shell"]


def make_sphere_shell(
    n_points: int = 40256,
    radius: float = 1.0,
    jitter: float = 0.05,
    seed: int = 7,
    scale: float = 1.0,
) -> PointCloud:
    """Points on a sphere shell with radial jitter.

    Directions are uniform on the sphere; each radius is perturbed
    uniformly within ``±jitter * radius``. ``scale`` multiplies the final
    coordinates, which sets the working unit without changing the shape.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    u = rng.standard_normal((n_points, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = radius * (1.0 + rng.uniform(-jitter, jitter, n_points))
    return PointCloud(scale * u * r[:, None])
