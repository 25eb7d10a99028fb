"""Connectivity kernels and adjacency sampling for the soft geometric
block model.

A kernel is a pair of connectivity probability functions: one applied to
node pairs in the same community, one to pairs in different communities.
Both see only the wrap-around displacement of the two points.  Three
kinds are supported: constant kernels (the stochastic block model),
indicator kernels of an l-infinity ball (the geometric block model), and
arbitrary user-supplied callables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import NumericError
from .torus import as_points, sample_uniform, torus_diff

__all__ = [
    "SbmKernel",
    "GbmKernel",
    "CustomKernel",
    "SgbmInstance",
    "eval_kernel",
    "edge_densities",
    "estimate_densities",
    "canonical_assignment",
    "validate_assignment",
    "sample_instance",
    "save_edge_list",
    "load_edge_list",
    "save_instance_metadata",
    "kernel_to_dict",
    "kernel_from_dict",
]


def _linf(disp: np.ndarray) -> np.ndarray:
    return np.abs(np.atleast_2d(disp)).max(axis=-1)


@dataclass(frozen=True)
class SbmKernel:
    """Constant connectivity: probability ``p_in`` within a community,
    ``p_out`` across communities, independent of geometry."""

    p_in: float
    p_out: float

    kind = "sbm"

    def __post_init__(self):
        for name, p in (("p_in", self.p_in), ("p_out", self.p_out)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")

    def probabilities(self, disp, same) -> np.ndarray:
        m = np.atleast_2d(disp).shape[0]
        return np.where(np.asarray(same, bool), self.p_in, self.p_out) * np.ones(m)

    def densities(self, d: int) -> tuple[float, float]:
        return self.p_in, self.p_out


@dataclass(frozen=True)
class GbmKernel:
    """Indicator connectivity: an edge appears exactly when the
    wrap-around l-infinity distance is at most ``r_in`` (same community)
    or ``r_out`` (different communities).

    Radii are restricted to ``(0, 1/2]``; beyond 1/2 the ball covers the
    torus and the kernel degenerates to the constant 1.
    """

    r_in: float
    r_out: float

    kind = "gbm"

    def __post_init__(self):
        if not 0.0 < self.r_out < self.r_in <= 0.5:
            raise ValueError(
                f"gbm radii must satisfy 0 < r_out < r_in <= 1/2, "
                f"got r_in={self.r_in}, r_out={self.r_out}"
            )

    def probabilities(self, disp, same) -> np.ndarray:
        dist = _linf(disp)
        same = np.asarray(same, bool)
        radius = np.where(same, self.r_in, self.r_out)
        return (dist <= radius).astype(float)

    def densities(self, d: int) -> tuple[float, float]:
        return (2.0 * self.r_in) ** d, (2.0 * self.r_out) ** d


@dataclass(frozen=True)
class CustomKernel:
    """User-supplied connectivity probability functions.

    ``eval_in`` and ``eval_out`` map an ``(m, d)`` array of displacements
    in ``[-1/2, 1/2)^d`` to ``m`` probabilities.  Optional analytic
    Fourier providers ``fourier_in``/``fourier_out`` map a lattice vector
    (length-``d`` int array) to a real coefficient; without them the
    coefficients are obtained by quadrature.  ``tail_bound`` bounds the
    coefficient magnitudes beyond any truncation radius; leaving it
    ``None`` makes condition checks inconclusive rather than silently
    asserted.
    """

    eval_in: Callable
    eval_out: Callable
    fourier_in: Callable | None = None
    fourier_out: Callable | None = None
    tail_bound: float | None = None

    kind = "custom"

    def probabilities(self, disp, same) -> np.ndarray:
        disp = np.atleast_2d(np.asarray(disp, float))
        same = np.asarray(same, bool)
        p_in = np.asarray(self.eval_in(disp), float)
        p_out = np.asarray(self.eval_out(disp), float)
        p = np.where(same, p_in, p_out)
        if p.size and (p.min() < -1e-12 or p.max() > 1.0 + 1e-12):
            raise ValueError("custom kernel returned probabilities outside [0, 1]")
        return np.clip(p, 0.0, 1.0)

    def densities(self, d: int, grid: int = 1024, tol: float = 1e-6) -> tuple[float, float]:
        return (
            _quadrature_density(self.eval_in, d, grid, tol),
            _quadrature_density(self.eval_out, d, grid, tol),
        )


Kernel = SbmKernel | GbmKernel | CustomKernel


def _grid_mean(fn, d: int, g: int) -> float:
    x = -0.5 + (np.arange(g) + 0.5) / g
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    disp = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    return float(np.mean(np.asarray(fn(disp), dtype=float)))


def _quadrature_density(fn, d: int, grid: int, tol: float) -> float:
    # cap the total grid so higher dimensions stay tractable
    g = min(grid, max(64, int(round(2 ** (24 / d)))))
    coarse = _grid_mean(fn, d, g)
    fine = _grid_mean(fn, d, 2 * g)
    residual = abs(fine - coarse)
    if residual > tol:
        raise NumericError(
            f"kernel density quadrature did not converge: residual {residual:.3e} "
            f"exceeds {tol:.1e} at {2 * g} points per axis"
        )
    return fine


def eval_kernel(kernel: Kernel, disp, same):
    """Connection probability for a displacement and a same-community flag.

    ``disp`` may be a single displacement or an ``(m, d)`` batch; ``same``
    a bool or a matching bool array.  Scalars in give a float out.
    """
    disp = np.asarray(disp, float)
    single = disp.ndim == 1 and np.ndim(same) == 0
    p = kernel.probabilities(disp, same)
    return float(p[0]) if single else p


def edge_densities(kernel: Kernel, d: int) -> tuple[float, float]:
    """Expected intra- and inter-community edge densities (mu_in, mu_out).

    These are the integrals of the two connectivity functions over the
    torus: the constants themselves for an sbm kernel, ``(2 r)^d`` for a
    gbm kernel, and a midpoint-rule quadrature for custom kernels (which
    raises ``NumericError`` with the residual if two grid resolutions
    disagree).
    """
    return kernel.densities(d)


def canonical_assignment(n: int, k: int) -> np.ndarray:
    """Block assignment: nodes 1..n/k in community 1, the next n/k in 2, ..."""
    if n % k:
        raise ValueError(f"n={n} must be divisible by k={k}")
    return np.repeat(np.arange(1, k + 1), n // k)


def validate_assignment(labels, k: int) -> np.ndarray:
    """Check a balanced assignment with labels in 1..k; return it as an array."""
    labels = np.asarray(labels, dtype=int)
    n = labels.size
    if n % k:
        raise ValueError(f"n={n} must be divisible by k={k}")
    counts = np.bincount(labels, minlength=k + 1)
    if counts[0] or labels.min() < 1 or labels.max() > k:
        raise ValueError("labels must lie in {1, ..., k}")
    if not np.all(counts[1:] == n // k):
        raise ValueError("communities must have equal size n/k")
    return labels


@dataclass(frozen=True, eq=False)
class SgbmInstance:
    """One sampled graph: kernel, community labels, embedded points and
    the symmetric 0/1 adjacency matrix with zero diagonal."""

    kernel: Kernel
    labels: np.ndarray
    points: np.ndarray
    adjacency: np.ndarray
    seed: int
    k: int

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def d(self) -> int:
        return self.points.shape[1]


def sample_instance(
    kernel: Kernel,
    n: int,
    k: int,
    d: int,
    seed,
    fixed_assignment=None,
    fixed_points=None,
    permute_assignment: bool = False,
) -> SgbmInstance:
    """Sample an instance of the model.

    Points are uniform on the torus unless ``fixed_points`` is given; the
    assignment defaults to the canonical block layout (optionally
    shuffled when ``permute_assignment``).  Each edge {i, j} with i < j is
    then included independently with the kernel probability of the pair's
    displacement.  Edges are drawn in lexicographic (i, j) order from a
    stream derived from ``seed``, so instances are bit-reproducible.
    """
    if k < 2:
        raise ValueError("need at least k=2 communities")
    if n % k:
        raise ValueError(f"n={n} must be divisible by k={k}")
    root = np.random.SeedSequence(seed)
    points_ss, edges_ss, perm_ss = root.spawn(3)

    if fixed_points is None:
        points = sample_uniform(d, n, points_ss)
    else:
        points = as_points(fixed_points)
        if points.shape != (n, d):
            raise ValueError(f"fixed_points must have shape ({n}, {d})")

    if fixed_assignment is None:
        labels = canonical_assignment(n, k)
        if permute_assignment:
            labels = np.random.default_rng(perm_ss).permutation(labels)
    else:
        labels = validate_assignment(fixed_assignment, k)
        if labels.size != n:
            raise ValueError("fixed_assignment length must equal n")

    rng = np.random.default_rng(edges_ss)
    adjacency = np.zeros((n, n), dtype=np.uint8)
    for i in range(n - 1):
        disp = torus_diff(points[i + 1 :], points[i])
        same = labels[i + 1 :] == labels[i]
        p = kernel.probabilities(disp, same)
        row = rng.random(n - 1 - i) < p
        adjacency[i, i + 1 :] = row
        adjacency[i + 1 :, i] = row
    return SgbmInstance(kernel, labels, points, adjacency, seed, k)


def estimate_densities(adjacency, labels, k: int) -> tuple[float, float]:
    """Plug-in density estimates from a graph and a labelling.

    Average of the adjacency entries over same-community pairs and over
    cross-community pairs (diagonal excluded).  Used by the CLI's
    robustness mode in place of the analytic ``edge_densities``.
    """
    A = np.asarray(adjacency, dtype=float)
    labels = validate_assignment(labels, k)
    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    n = labels.size
    n_same = same.sum()
    n_diff = n * (n - 1) - n_same
    mu_in = float(A[same].sum() / n_same)
    mu_out = float(A[(~same) & ~np.eye(n, dtype=bool)].sum() / n_diff)
    return mu_in, mu_out


# ---------------------------------------------------------------------------
# plain-text interchange formats


def save_edge_list(instance: SgbmInstance, path) -> None:
    """Write the adjacency as an edge list: header ``n k d seed``, then
    one 1-based ``i j`` pair per line with i < j."""
    lines = [f"{instance.n} {instance.k} {instance.d} {instance.seed}"]
    rows, cols = np.nonzero(np.triu(instance.adjacency, k=1))
    lines.extend(f"{i + 1} {j + 1}" for i, j in zip(rows, cols))
    Path(path).write_text("\n".join(lines) + "\n")


def load_edge_list(path) -> tuple[np.ndarray, dict]:
    """Read an edge list written by :func:`save_edge_list`.

    Returns the dense adjacency matrix and a header dict with keys
    ``n``, ``k``, ``d``, ``seed``.
    """
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"empty edge list file: {path}")
    n, k, d, seed = (int(v) for v in lines[0].split())
    adjacency = np.zeros((n, n), dtype=np.uint8)
    for line in lines[1:]:
        if not line.strip():
            continue
        i, j = (int(v) for v in line.split())
        if not (1 <= i < j <= n):
            raise ValueError(f"bad edge '{line}': need 1 <= i < j <= n")
        adjacency[i - 1, j - 1] = 1
        adjacency[j - 1, i - 1] = 1
    return adjacency, {"n": n, "k": k, "d": d, "seed": seed}


def kernel_to_dict(kernel: Kernel) -> dict:
    if isinstance(kernel, SbmKernel):
        return {"kind": "sbm", "p_in": kernel.p_in, "p_out": kernel.p_out}
    if isinstance(kernel, GbmKernel):
        return {"kind": "gbm", "r_in": kernel.r_in, "r_out": kernel.r_out}
    raise ValueError("only sbm and gbm kernels have a serialisable form")


def kernel_from_dict(spec: dict) -> Kernel:
    kind = spec.get("kind")
    if kind == "sbm":
        return SbmKernel(float(spec["p_in"]), float(spec["p_out"]))
    if kind == "gbm":
        return GbmKernel(float(spec["r_in"]), float(spec["r_out"]))
    raise ValueError(f"unknown kernel kind {kind!r}")


def save_instance_metadata(instance: SgbmInstance, path) -> None:
    """Write labels, points and kernel parameters as a JSON document."""
    doc = {
        "n": instance.n,
        "k": instance.k,
        "d": instance.d,
        "seed": instance.seed,
        "kernel": kernel_to_dict(instance.kernel),
        "labels": instance.labels.tolist(),
        "points": instance.points.tolist(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
