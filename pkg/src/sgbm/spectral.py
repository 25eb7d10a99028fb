"""Dense symmetric eigendecomposition, target-nearest eigenvalue
selection, empirical spectral counts, and trace moments."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericError

__all__ = [
    "SpectrumResult",
    "SpectralSelection",
    "full_spectrum",
    "select_near",
    "spectrum_interval_count",
    "trace_moment",
    "save_spectrum",
    "save_embedding",
]

_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Full eigendecomposition of a symmetric matrix.

    ``eigenvalues`` sorted descending; ``eigenvectors`` the matching
    orthonormal columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True, eq=False)
class SpectralSelection:
    """The ``count`` eigenvalues nearest a target and their eigenvectors.

    ``indices`` are positions in the descending spectrum.  ``vectors``
    has one orthonormal column per selected eigenvalue, ordered by
    decreasing eigenvalue.  ``gap`` is the distance from the target to
    the nearest eigenvalue that was *not* selected.
    """

    target: float
    indices: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray
    gap: float


def full_spectrum(A) -> SpectrumResult:
    """Eigendecompose a symmetric matrix, eigenvalues descending."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.max(np.abs(A - A.T)) > _SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric within 1e-12")
    try:
        values, vectors = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    return SpectrumResult(values[::-1].copy(), vectors[:, ::-1].copy())


def select_near(spectrum: SpectrumResult, target: float, count: int) -> SpectralSelection:
    """Select the ``count`` eigenvalues nearest ``target``.

    The selected set minimises the worst distance to the target among all
    ``count``-subsets.  Exact distance ties prefer the larger eigenvalue,
    then the lower position, so the choice is deterministic and does not
    depend on the storage order of equal eigenvalues.
    """
    values = spectrum.eigenvalues
    n = values.size
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in 1..{n}, got {count}")
    dist = np.abs(values - target)
    order = np.lexsort((np.arange(n), -values, dist))
    chosen = order[:count]
    rest = order[count:]
    gap = float(dist[rest].min()) if rest.size else float("inf")
    desc = chosen[np.argsort(-values[chosen], kind="stable")]
    return SpectralSelection(
        target=float(target),
        indices=desc,
        eigenvalues=values[desc].copy(),
        vectors=spectrum.eigenvectors[:, desc].copy(),
        gap=gap,
    )


def spectrum_interval_count(spectrum: SpectrumResult, n: int, interval) -> int:
    """Number of eigenvalues with ``lambda / n`` in the open interval.

    The limiting-measure prediction is only meaningful away from zero; a
    warning is emitted when the interval touches it.
    """
    a, b = interval
    if not a < b:
        raise ValueError(f"degenerate interval {interval}")
    if a <= 0.0 <= b:
        warnings.warn(
            "interval contains 0, where the limiting measure says nothing",
            UserWarning,
            stacklevel=2,
        )
    scaled = spectrum.eigenvalues / n
    return int(np.count_nonzero((scaled > a) & (scaled < b)))


def trace_moment(A, m: int) -> float:
    """``trace(A^m) / n^m`` by repeated matrix multiplication."""
    if not 1 <= m <= 8:
        raise ValueError("moment order limited to 1..8")
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    power = np.linalg.matrix_power(A, m)
    return float(np.trace(power)) / n**m


def save_spectrum(spectrum: SpectrumResult, path, scale: float | None = None) -> None:
    """Write ``index eigenvalue`` rows (1-based, descending), optionally
    with a third ``eigenvalue/scale`` column."""
    lines = []
    for i, v in enumerate(spectrum.eigenvalues, start=1):
        if scale is None:
            lines.append(f"{i} {v:.12g}")
        else:
            lines.append(f"{i} {v:.12g} {v / scale:.12g}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_embedding(vectors, labels, path) -> None:
    """Write the embedding rows with a trailing true-label column,
    tab-separated, for external plotting."""
    vectors = np.asarray(vectors, dtype=float)
    labels = np.asarray(labels, dtype=int)
    lines = []
    for row, lab in zip(vectors, labels):
        coords = "\t".join(f"{c:.12g}" for c in np.atleast_1d(row))
        lines.append(f"{coords}\t{lab}")
    Path(path).write_text("\n".join(lines) + "\n")
