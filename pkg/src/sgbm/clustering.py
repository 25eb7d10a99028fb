"""k-means on the spectral embedding and the end-to-end clustering
pipeline.

The k-means solver is Lloyd's algorithm with k-means++ seeding and
restarts.  Every random draw is tied to ``(seed, restart)``, restarts
are reduced by ``(objective, restart index)``, distance ties go to the
lowest center index, and an empty cluster is repaired by reseeding its
center at the point farthest from its own center -- so results are
bit-reproducible.  A brute-force enumerator doubles as the exactness
oracle on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fourier import target_eigenvalue
from .spectral import SpectralSelection, SpectrumResult, full_spectrum, select_near

__all__ = [
    "KMeansResult",
    "kmeans",
    "brute_force_kmeans",
    "spectral_embedding",
    "spectral_clustering",
    "classical_embedding",
    "save_labels",
]


@dataclass(frozen=True, eq=False)
class KMeansResult:
    """Outcome of one k-means solve.

    ``labels`` in 1..k; ``centers`` row ``c`` is the centroid of cluster
    ``c+1``; ``objective`` the summed squared distance of points to their
    centers.  ``converged`` is False when the iteration cap was reached
    before the assignment stabilised.  ``objective_history`` records the
    objective after each Lloyd step of the winning restart.
    """

    labels: np.ndarray
    centers: np.ndarray
    objective: float
    iterations: int
    restart_index: int
    converged: bool
    objective_history: list = field(default_factory=list)


def _assign(V: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = ((V[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def _centroids(V: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    centers = np.zeros((k, V.shape[1]))
    for c in range(k):
        members = labels == c
        if members.any():
            centers[c] = V[members].mean(axis=0)
    return centers


def _objective(V: np.ndarray, centers: np.ndarray, labels: np.ndarray) -> float:
    return float(((V - centers[labels]) ** 2).sum())


def _repair_empty(V, labels, centers, k) -> np.ndarray:
    counts = np.bincount(labels, minlength=k)
    empties = np.flatnonzero(counts == 0)
    if not empties.size:
        return labels
    labels = labels.copy()
    own = ((V - centers[labels]) ** 2).sum(axis=1)
    for c in empties:
        order = np.argsort(-own, kind="stable")
        for i in order:
            if counts[labels[i]] > 1:
                counts[labels[i]] -= 1
                labels[i] = c
                counts[c] = 1
                own[i] = -np.inf
                break
    return labels


def _kmeanspp(V: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = V.shape[0]
    centers = np.empty((k, V.shape[1]))
    centers[0] = V[rng.integers(n)]
    d2 = ((V - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            pick = int(rng.integers(n))
        else:
            pick = int(rng.choice(n, p=d2 / total))
        centers[j] = V[pick]
        d2 = np.minimum(d2, ((V - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(V, k, rng, max_iter, restart_index) -> KMeansResult:
    centers = _kmeanspp(V, k, rng)
    prev = None
    history: list[float] = []
    converged = False
    iterations = 0
    labels = np.zeros(V.shape[0], dtype=int)
    for iterations in range(1, max_iter + 1):
        labels = _assign(V, centers)
        labels = _repair_empty(V, labels, centers, k)
        centers = _centroids(V, labels, k)
        history.append(_objective(V, centers, labels))
        if prev is not None and np.array_equal(labels, prev):
            converged = True
            break
        prev = labels
    return KMeansResult(
        labels + 1, centers, history[-1], iterations, restart_index, converged, history
    )


def kmeans(V, k: int, restarts: int = 20, max_iter: int = 300, seed: int = 0) -> KMeansResult:
    """Best-of-``restarts`` Lloyd with k-means++ seeding.

    Deterministic per ``seed``: every restart draws from its own stream
    keyed by ``(seed, restart)`` and the winner is the lowest
    ``(objective, restart index)`` pair.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n = V.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if restarts < 1:
        raise ValueError("need at least one restart")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence((seed, r)))
        candidate = _lloyd(V, k, rng, max_iter, r)
        if best is None or (candidate.objective, candidate.restart_index) < (
            best.objective,
            best.restart_index,
        ):
            best = candidate
    return best


def brute_force_kmeans(V, k: int, limit: int = 2_000_000) -> KMeansResult:
    """Exact global minimiser of the k-means objective by enumeration.

    Centers are forced to centroids, so scanning the ``k^n`` assignments
    suffices.  Feasible only while ``k^n`` stays at or below ``limit``.
    Ties resolve to the lexicographically first assignment.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n = V.shape[0]
    if k < 1:
        raise ValueError("need k >= 1")
    total_assignments = k**n
    if total_assignments > limit:
        raise ValueError(
            f"{k}^{n} = {total_assignments} assignments exceed the limit {limit}"
        )
    total_ss = float((V**2).sum())
    best_obj = np.inf
    best_assign = None
    powers = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    chunk = 1 << 17
    for start in range(0, total_assignments, chunk):
        codes = np.arange(start, min(start + chunk, total_assignments), dtype=np.int64)
        assigns = (codes[:, None] // powers) % k
        obj = np.full(codes.size, total_ss)
        for c in range(k):
            mask = assigns == c
            counts = mask.sum(axis=1)
            sums = mask.astype(float) @ V
            nz = counts > 0
            obj[nz] -= (sums[nz] ** 2).sum(axis=1) / counts[nz]
        i = int(np.argmin(obj))
        if best_assign is None or obj[i] < best_obj:
            best_obj = float(obj[i])
            best_assign = assigns[i].astype(int)
    centers = _centroids(V, best_assign, k)
    best_obj = max(best_obj, 0.0)
    return KMeansResult(best_assign + 1, centers, best_obj, 0, -1, True, [best_obj])


def spectral_embedding(A, k: int, mu_in: float, mu_out: float) -> SpectralSelection:
    """Eigenvectors of the k-1 eigenvalues nearest the target
    ``n (mu_in - mu_out) / k``; the rows are the points handed to k-means."""
    A = np.asarray(A, dtype=float)
    spectrum = full_spectrum(A)
    target = target_eigenvalue(A.shape[0], k, mu_in, mu_out)
    return select_near(spectrum, target, k - 1)


def spectral_clustering(
    A,
    k: int,
    mu_in: float,
    mu_out: float,
    seed: int = 0,
    restarts: int = 20,
    max_iter: int = 300,
) -> np.ndarray:
    """Higher-order spectral clustering: embed by the eigenvectors near
    the target eigenvalue, then k-means the rows.  Returns labels 1..k."""
    selection = spectral_embedding(A, k, mu_in, mu_out)
    result = kmeans(selection.vectors, k, restarts=restarts, max_iter=max_iter, seed=seed)
    return result.labels


def classical_embedding(spectrum: SpectrumResult, k: int, drop_leading: bool = False) -> np.ndarray:
    """Embedding used by classical spectral clustering: the eigenvectors
    of the k largest eigenvalues, or ranks 2..k when ``drop_leading``
    (the leading eigenvector of a nearly regular graph is nearly
    constant, so dropping it changes little)."""
    if drop_leading:
        return spectrum.eigenvectors[:, 1:k].copy()
    return spectrum.eigenvectors[:, :k].copy()


def save_labels(labels, path) -> None:
    """One 1-based label per line."""
    labels = np.asarray(labels, dtype=int)
    Path(path).write_text("\n".join(str(int(v)) for v in labels) + "\n")
