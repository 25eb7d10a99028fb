"""Points, displacements and distances on the d-dimensional flat unit torus.

Torus coordinates live in ``[0, 1)`` per axis.  Displacements are reduced
to the half-open box ``[-1/2, 1/2)^d``, so ``-0.5`` is the canonical
representative of a half period and the reduction is total and
deterministic.  The wrap-around distance is the l-infinity norm of the
reduced displacement and never exceeds ``1/2``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["torus_diff", "torus_linf_dist", "sample_uniform", "as_points"]


def as_points(x) -> np.ndarray:
    """Coerce ``x`` to a float array of torus points.

    Accepts a single point (shape ``(d,)``) or a point set (shape
    ``(n, d)``).  Raises ``ValueError`` when coordinates fall outside
    ``[0, 1)``.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim not in (1, 2):
        raise ValueError(f"expected a point or point set, got shape {arr.shape}")
    if arr.size and (arr.min() < 0.0 or arr.max() >= 1.0):
        raise ValueError("torus coordinates must lie in [0, 1)")
    return arr


def torus_diff(x, y) -> np.ndarray:
    """Componentwise displacement ``x - y`` reduced to ``[-1/2, 1/2)^d``.

    Broadcasts over leading axes, so a point set against a single point
    works.  Antisymmetric modulo 1: ``torus_diff(x, y)`` and
    ``-torus_diff(y, x)`` agree up to the half-period representative.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 0 or y.ndim == 0:
        raise ValueError("points must be one-dimensional coordinate arrays")
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(
            f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}"
        )
    diff = x - y
    return diff - np.floor(diff + 0.5)


def torus_linf_dist(x, y):
    """Wrap-around l-infinity distance, a value in ``[0, 1/2]``.

    Equals the max over axes of the circular distance
    ``min(|x_j - y_j|, 1 - |x_j - y_j|)``.
    """
    return np.abs(torus_diff(x, y)).max(axis=-1)


def sample_uniform(d: int, count: int, seed) -> np.ndarray:
    """Draw ``count`` points uniformly on the torus, shape ``(count, d)``.

    Deterministic for a fixed ``seed``; every coordinate is independent
    uniform on ``[0, 1)``.  ``seed`` may be an int, a ``SeedSequence`` or
    a ``Generator``.
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    return rng.random((count, d))
