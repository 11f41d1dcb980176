"""Input validation helpers.

All public entry points funnel coordinate data through :func:`check_points`
so that the rest of the package can assume finite float64 ``(N, 3)`` arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyCloudError


def check_points(X, *, allow_empty: bool = False, name: str = "points") -> np.ndarray:
    """Coerce ``X`` to a float64 ``(N, 3)`` array and reject non-finite rows.

    Parameters
    ----------
    X : array-like of shape (N, 3)
        Cartesian coordinates. Objects exposing an ``xyz`` attribute
        (e.g. :class:`~gravclean.cloud.PointCloud`) are unwrapped.
    allow_empty : bool
        Permit ``N == 0``. Disabled by default because most operations
        are undefined on empty clouds.

    Returns
    -------
    numpy.ndarray
        A float64 view or copy of shape ``(N, 3)``.
    """
    X = getattr(X, "xyz", X)
    pts = np.asarray(X, dtype=np.float64)
    if pts.ndim == 1 and pts.size == 3:
        pts = pts.reshape(1, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {pts.shape}")
    if pts.shape[0] == 0 and not allow_empty:
        raise EmptyCloudError(f"{name} is empty")
    bad = ~np.isfinite(pts)
    if bad.any():
        rows = np.flatnonzero(bad.any(axis=1))
        head = ", ".join(str(r) for r in rows[:5])
        more = "" if rows.size <= 5 else f" (+{rows.size - 5} more)"
        raise ValueError(
            f"{name} contains non-finite coordinates at rows [{head}]{more}"
        )
    return pts


def check_labels(labels, n_points: int) -> np.ndarray:
    """Coerce a per-point noise-label channel to a bool array of length ``n_points``."""
    out = np.asarray(labels)
    if out.shape != (n_points,):
        raise ValueError(
            f"labels must have shape ({n_points},), got {out.shape}"
        )
    return out.astype(bool)


def check_ids(ids, n_points: int) -> np.ndarray:
    """Coerce stable point ids to an int64 array of length ``n_points``."""
    out = np.asarray(ids, dtype=np.int64)
    if out.shape != (n_points,):
        raise ValueError(f"ids must have shape ({n_points},), got {out.shape}")
    if n_points and np.unique(out).size != n_points:
        raise ValueError("ids must be unique")
    return out
