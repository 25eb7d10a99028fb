"""Fourier analysis of connectivity kernels and the predicted limiting
spectrum of the rescaled adjacency matrix.

Coefficients are taken on the integer lattice,
``F_hat(z) = integral of F(x) exp(-2 pi i <z, x>) over the torus``; for
the even kernels used here they are real.  Combining the in/out
coefficients per lattice vector yields an atomic measure on the real
line that the spectrum of ``A/n`` approaches away from zero: one "bulk"
atom ``(F_in_hat + (k-1) F_out_hat) / k`` of multiplicity 1 and one
"community" atom ``(F_in_hat - F_out_hat) / k`` of multiplicity k-1 per
lattice vector.  The community atom at the origin is the target the
clustering algorithm steers the eigenvalue selection towards.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericWarning
from .model import CustomKernel, GbmKernel, Kernel, SbmKernel, edge_densities

__all__ = [
    "fourier_sbm",
    "fourier_gbm",
    "fourier_numeric",
    "FourierTable",
    "build_fourier_table",
    "save_fourier_table",
    "LimitingMeasure",
    "limiting_measure",
    "ConditionReport",
    "check_conditions",
    "save_condition_report",
    "spectral_separation",
    "target_eigenvalue",
    "measure_moment",
    "moment_tail_bound",
]

_IMAG_TOL = 1e-9

#: default truncation radius of the coefficient table, per dimension
DEFAULT_Z_MAX = {1: 64, 2: 16}


def _as_lattice(z, d: int) -> tuple[np.ndarray, bool]:
    """Coerce ``z`` to an ``(m, d)`` int array; report if it was a single vector."""
    arr = np.asarray(z)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 1 and d == 1 and arr.size != 1:
        # a flat list of scalar frequencies in dimension one
        arr = arr.reshape(-1, 1)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != d:
        raise ValueError(f"lattice vectors must have length d={d}, got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if np.any(np.abs(arr - rounded) > 0):
            raise ValueError("lattice vectors must be integer")
        arr = rounded.astype(int)
    return arr.astype(int), single


def fourier_sbm(p: float, z) -> float:
    """Fourier coefficient of the constant kernel ``p``: ``p`` at the
    origin and 0 at every other lattice vector (integer sinc zeros)."""
    z = np.atleast_1d(np.asarray(z))
    return float(p) if not z.any() else 0.0


def fourier_gbm(r: float, z, d: int | None = None) -> float:
    """Fourier coefficient of the l-infinity ball indicator of radius ``r``.

    Separable closed form ``prod_j 2 r sinc(2 pi r z_j)``, which equals
    the edge density ``(2 r)^d`` at the origin.  Validated against the
    midpoint quadrature oracle by the test-suite before anything relies
    on it.
    """
    if not 0.0 < r <= 0.5:
        raise ValueError(f"radius must lie in (0, 1/2], got {r}")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if d is not None and z.size != d:
        raise ValueError(f"lattice vector length {z.size} != d={d}")
    # np.sinc(x) = sin(pi x) / (pi x), so 2r*np.sinc(2 r z) = sin(2 pi r z)/(pi z)
    return float(np.prod(2.0 * r * np.sinc(2.0 * r * z)))


def _phase_matrices(x: np.ndarray, uniques: list[np.ndarray]) -> list[np.ndarray]:
    return [np.exp(-2j * np.pi * np.outer(x, u)) for u in uniques]


def _coefficient_tensor(kernel_eval, x: np.ndarray, uniques: list[np.ndarray]) -> np.ndarray:
    """Contract the sampled kernel against per-axis phase factors.

    Evaluates the kernel over the full midpoint grid in chunks along the
    first axis, so memory stays at O(g^(d-1)) instead of O(g^d).
    """
    g = x.size
    d = len(uniques)
    phases = _phase_matrices(x, uniques)
    rest = g ** (d - 1)
    acc = np.zeros((phases[0].shape[1], rest), dtype=complex)
    chunk = max(1, (1 << 21) // max(rest, 1))
    tail_axes = [x] * (d - 1)
    for start in range(0, g, chunk):
        xs = x[start : start + chunk]
        mesh = np.meshgrid(xs, *tail_axes, indexing="ij")
        disp = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        phi = np.asarray(kernel_eval(disp), dtype=float).reshape(xs.size, rest)
        acc += phases[0][start : start + chunk].T @ phi
    tensor = acc.reshape((phases[0].shape[1],) + (g,) * (d - 1))
    for j in range(1, d):
        # contract the leading remaining grid axis; tensordot appends the
        # new frequency axis at the end, which keeps axis order z_0..z_j
        tensor = np.tensordot(tensor, phases[j], axes=([1], [0]))
    return tensor / g**d


def fourier_numeric(kernel_eval, z, d: int, grid_points_per_axis: int = 4096):
    """Midpoint-rule Fourier coefficients of a torus kernel.

    ``kernel_eval`` maps an ``(m, d)`` array of displacements in
    ``[-1/2, 1/2)^d`` to ``m`` values.  ``z`` is a single lattice vector
    (a plain int is fine when d=1) or a sequence of them; a single vector
    yields a float, a sequence an array.  The real part is returned; an
    imaginary residue beyond 1e-9 triggers a ``NumericWarning`` since the
    kernels of interest are even.

    Note the rule is first-order accurate across a jump of an indicator
    kernel unless the jump sits on a cell boundary, i.e. unless the
    radius is a multiple of ``1/grid_points_per_axis``.
    """
    g = int(grid_points_per_axis)
    if g < 64:
        raise ValueError("need at least 64 grid points per axis")
    if g**d > 1 << 26:
        raise ValueError(f"grid of {g}^{d} points is too large")
    zs, single = _as_lattice(z, d)
    x = -0.5 + (np.arange(g) + 0.5) / g
    uniques = [np.unique(zs[:, j]) for j in range(d)]
    tensor = _coefficient_tensor(kernel_eval, x, uniques)
    idx = tuple(np.searchsorted(uniques[j], zs[:, j]) for j in range(d))
    values = tensor[idx]
    worst = float(np.abs(values.imag).max())
    if worst > _IMAG_TOL:
        warnings.warn(
            f"imaginary residue {worst:.3e} exceeds {_IMAG_TOL:.0e}; "
            "kernel may not be even",
            NumericWarning,
            stacklevel=2,
        )
    real = np.ascontiguousarray(values.real)
    return float(real[0]) if single else real


def _lattice_ball(d: int, z_max: int) -> np.ndarray:
    axes = [range(-z_max, z_max + 1)] * d
    return np.array(list(itertools.product(*axes)), dtype=int)


@dataclass(frozen=True, eq=False)
class FourierTable:
    """Truncated table of kernel Fourier coefficients.

    ``zs`` holds every lattice vector with l-infinity norm at most
    ``z_max``; ``f_in``/``f_out`` the matching real coefficients.  The
    zeroth entries equal the edge densities.  ``tail_bound`` bounds the
    magnitude of every coefficient beyond the truncation (``None`` when
    nothing is known, in which case condition checks are inconclusive);
    ``tail_shell_coeff`` optionally refines it to ``c / ||z||`` decay.
    """

    zs: np.ndarray
    f_in: np.ndarray
    f_out: np.ndarray
    z_max: int
    d: int
    tail_bound: float | None
    tail_shell_coeff: float | None = None
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index.update(
            {tuple(zv): i for i, zv in enumerate(np.atleast_2d(self.zs))}
        )
        if (0,) * self.d not in self._index:
            raise ValueError("table must contain the origin")
        if np.any(np.abs(self.f_in) > self.mu_in + 1e-9) or np.any(
            np.abs(self.f_out) > self.mu_out + 1e-9
        ):
            raise ValueError(
                "coefficients of a nonnegative kernel cannot exceed the density"
            )

    @property
    def origin(self) -> int:
        return self._index[(0,) * self.d]

    @property
    def mu_in(self) -> float:
        return float(self.f_in[self.origin])

    @property
    def mu_out(self) -> float:
        return float(self.f_out[self.origin])

    def coefficients(self, z) -> tuple[float, float]:
        """The (F_in_hat, F_out_hat) pair at one lattice vector."""
        key = tuple(np.atleast_1d(np.asarray(z, dtype=int)))
        i = self._index[key]
        return float(self.f_in[i]), float(self.f_out[i])


def build_fourier_table(
    kernel: Kernel,
    d: int,
    z_max: int | None = None,
    grid_points_per_axis: int = 4096,
) -> FourierTable:
    """Tabulate both coefficient families up to a truncation radius.

    Analytic forms are used for the sbm and gbm kernels.  Custom kernels
    use their Fourier providers when given, otherwise one shared
    quadrature pass; their tail bound must come from the kernel.
    """
    if z_max is None:
        z_max = DEFAULT_Z_MAX.get(d, 8)
    zs = _lattice_ball(d, z_max)
    if isinstance(kernel, SbmKernel):
        f_in = np.zeros(len(zs))
        f_out = np.zeros(len(zs))
        origin = ~zs.any(axis=1)
        f_in[origin] = kernel.p_in
        f_out[origin] = kernel.p_out
        tail, shell = 0.0, 0.0
    elif isinstance(kernel, GbmKernel):
        f_in = np.array([fourier_gbm(kernel.r_in, z, d) for z in zs])
        f_out = np.array([fourier_gbm(kernel.r_out, z, d) for z in zs])
        # along the largest axis |coef| <= (2r)^(d-1) * 1/(pi z); the
        # other axes contribute factors at most 2r <= 1
        shell = max(
            (2 * kernel.r_in) ** (d - 1), (2 * kernel.r_out) ** (d - 1)
        ) / np.pi
        tail = shell / (z_max + 1)
    else:
        f_in = _custom_coefficients(kernel.eval_in, kernel.fourier_in, zs, d, grid_points_per_axis)
        f_out = _custom_coefficients(kernel.eval_out, kernel.fourier_out, zs, d, grid_points_per_axis)
        tail, shell = kernel.tail_bound, None
    return FourierTable(zs, f_in, f_out, z_max, d, tail, shell)


def _custom_coefficients(eval_fn, provider, zs, d, grid) -> np.ndarray:
    if provider is not None:
        return np.array([float(provider(z)) for z in zs])
    return np.asarray(fourier_numeric(eval_fn, zs, d, grid), dtype=float)


def save_fourier_table(table: FourierTable, path) -> None:
    """Write rows ``z_1 ... z_d  F_in_hat  F_out_hat`` as plain text."""
    lines = []
    for zv, a, b in zip(table.zs, table.f_in, table.f_out):
        zpart = " ".join(str(int(c)) for c in np.atleast_1d(zv))
        lines.append(f"{zpart} {a:.12g} {b:.12g}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# the limiting measure and its moments


@dataclass(frozen=True, eq=False)
class LimitingMeasure:
    """Atoms of the predicted limiting measure of the spectrum of A/n.

    Parallel arrays: location, integer multiplicity, originating lattice
    vector and family (``"bulk"`` or ``"community"``).  Atoms with
    ``|location|`` at or below the construction cutoff are left implicit,
    which also hides the infinite-multiplicity atom at zero that a
    constant kernel would produce.
    """

    locations: np.ndarray
    multiplicities: np.ndarray
    origins: np.ndarray
    families: np.ndarray
    k: int
    z_max: int
    tail_bound: float | None
    tail_shell_coeff: float | None = None

    def __len__(self) -> int:
        return self.locations.size


def limiting_measure(table: FourierTable, k: int, location_cutoff: float = 1e-12) -> LimitingMeasure:
    """Build the atomic measure from a coefficient table.

    Per lattice vector: a bulk atom ``(f_in + (k-1) f_out)/k`` with
    multiplicity 1 and a community atom ``(f_in - f_out)/k`` with
    multiplicity k-1.  Atoms within ``location_cutoff`` of zero are
    dropped (the measure is only meaningful away from zero).
    """
    if k < 2:
        raise ValueError("need k >= 2")
    bulk = (table.f_in + (k - 1) * table.f_out) / k
    community = (table.f_in - table.f_out) / k
    locations = np.concatenate([bulk, community])
    mult = np.concatenate(
        [np.ones(len(bulk), dtype=int), np.full(len(community), k - 1, dtype=int)]
    )
    origins = np.concatenate([table.zs, table.zs])
    families = np.array(["bulk"] * len(bulk) + ["community"] * len(community))
    keep = np.abs(locations) > location_cutoff
    return LimitingMeasure(
        locations[keep],
        mult[keep],
        origins[keep],
        families[keep],
        k,
        table.z_max,
        table.tail_bound,
        table.tail_shell_coeff,
    )


def measure_moment(measure: LimitingMeasure, m: int) -> float:
    """m-th moment of the measure: sum of multiplicity * location^m over
    the truncated atom list.  See :func:`moment_tail_bound` for the
    truncation error estimate."""
    if m < 1:
        raise ValueError("moment order must be at least 1")
    return float(np.sum(measure.multiplicities * measure.locations**m))


def moment_tail_bound(measure: LimitingMeasure, m: int, shells: int = 100_000) -> float:
    """Upper bound on the moment mass beyond the truncation radius.

    Sums ``count(shell) * k * bound(shell)^m`` over the omitted shells,
    where the per-coefficient bound is ``tail_shell_coeff / shell`` when
    a decay rate is known and the flat ``tail_bound`` otherwise.  Returns
    ``inf`` when the available information cannot certify convergence.
    """
    if measure.tail_bound is None:
        return float("inf")
    if measure.tail_bound == 0.0:
        return 0.0
    d = measure.origins.shape[1]
    radii = np.arange(measure.z_max + 1, measure.z_max + 1 + shells, dtype=float)
    counts = (2 * radii + 1) ** d - (2 * radii - 1) ** d
    if measure.tail_shell_coeff is not None:
        per = measure.tail_shell_coeff / radii
    else:
        per = np.full_like(radii, measure.tail_bound)
        if m <= d:  # flat bound over infinitely many shells cannot converge
            return float("inf")
    partial = float(np.sum(counts * measure.k * per**m))
    # crude integral remainder beyond the summed shells
    last = radii[-1]
    if measure.tail_shell_coeff is not None:
        decay = m - (d - 1)
        if decay <= 1:
            return float("inf")
        remainder = (
            measure.k
            * 2
            * d
            * 2 ** (d - 1)
            * measure.tail_shell_coeff**m
            / ((decay - 1) * last ** (decay - 1))
        )
    else:
        remainder = 0.0
    return partial + remainder


# ---------------------------------------------------------------------------
# separation conditions and the eigenvalue target


@dataclass(frozen=True)
class ConditionReport:
    """Result of scanning the two non-degeneracy conditions.

    ``min_margin_ii`` is the minimum over the truncated lattice of
    ``|f_in + (k-1) f_out - (mu_in - mu_out)|``; ``min_margin_iii`` the
    same for ``|f_in - f_out - (mu_in - mu_out)|`` away from the origin.
    ``tail_status`` records whether the region beyond the truncation was
    certified from the tail bound ("certified"), could not be
    ("inconclusive"), or was irrelevant because a margin already failed.
    """

    cond_ii_ok: bool
    cond_iii_ok: bool
    min_margin_ii: float
    min_margin_iii: float
    tail_status: str
    tail_margin: float | None
    z_max: int
    tolerance: float

    @property
    def certified(self) -> bool:
        return self.cond_ii_ok and self.cond_iii_ok and self.tail_status == "certified"


def check_conditions(
    table: FourierTable,
    k: int,
    mu_in: float | None = None,
    mu_out: float | None = None,
    tolerance: float = 1e-9,
) -> ConditionReport:
    """Scan the truncated lattice for the spectral-separation conditions.

    Condition (ii): the bulk combination never equals mu_in - mu_out at
    any lattice vector.  Condition (iii): the community combination never
    equals it away from the origin (at the origin it does, by design).
    The tail is certified when the coefficient bound keeps both
    combinations away from the target.
    """
    mu_in = table.mu_in if mu_in is None else mu_in
    mu_out = table.mu_out if mu_out is None else mu_out
    if not mu_in > mu_out > 0:
        raise ValueError("need mu_in > mu_out > 0")
    gap = mu_in - mu_out
    margins_ii = np.abs(table.f_in + (k - 1) * table.f_out - gap)
    nonzero = table.zs.any(axis=1)
    margins_iii = np.abs(table.f_in - table.f_out - gap)[nonzero]
    min_ii = float(margins_ii.min())
    min_iii = float(margins_iii.min())
    ok_ii = min_ii > tolerance
    ok_iii = min_iii > tolerance

    if table.tail_bound is None:
        tail_status, tail_margin = "inconclusive", None
    else:
        # beyond the truncation both combinations are at most k*tail in
        # magnitude, so their distance to gap is at least gap - k*tail
        tail_margin = gap - k * table.tail_bound
        tail_status = "certified" if tail_margin > tolerance else "inconclusive"
    return ConditionReport(
        ok_ii, ok_iii, min_ii, min_iii, tail_status, tail_margin, table.z_max, tolerance
    )


def save_condition_report(report: ConditionReport, path) -> None:
    """Write the report as ``key = value`` lines."""
    rows = [
        f"cond_ii_ok = {str(report.cond_ii_ok).lower()}",
        f"cond_iii_ok = {str(report.cond_iii_ok).lower()}",
        f"min_margin_ii = {report.min_margin_ii:.12g}",
        f"min_margin_iii = {report.min_margin_iii:.12g}",
        f"tail_status = {report.tail_status}",
        f"tail_margin = "
        + ("none" if report.tail_margin is None else f"{report.tail_margin:.12g}"),
        f"z_max = {report.z_max}",
        f"tolerance = {report.tolerance:.12g}",
    ]
    Path(path).write_text("\n".join(rows) + "\n")


def spectral_separation(
    table: FourierTable,
    k: int,
    mu_in: float | None = None,
    mu_out: float | None = None,
    tolerance: float = 1e-9,
) -> float:
    """Width of the protected window around the eigenvalue target.

    The minimum of three quantities: ``(mu_in - mu_out) / 2k`` covering
    the coefficient tail, the smallest bulk margin over the truncated
    lattice divided by k, and the smallest community margin away from the
    origin divided by k.  Requires a certified condition report.
    """
    mu_in = table.mu_in if mu_in is None else mu_in
    mu_out = table.mu_out if mu_out is None else mu_out
    report = check_conditions(table, k, mu_in, mu_out, tolerance)
    if not report.certified:
        raise RuntimeError(
            "separation undefined: conditions not certified "
            f"(ii={report.cond_ii_ok}, iii={report.cond_iii_ok}, tail={report.tail_status})"
        )
    gap = mu_in - mu_out
    eps_tail = gap / (2 * k)
    eps_bulk = report.min_margin_ii / k
    eps_community = report.min_margin_iii / k
    return float(min(eps_tail, eps_bulk, eps_community))


def target_eigenvalue(n: int, k: int, mu_in: float, mu_out: float) -> float:
    """The eigenvalue the informative eigenvectors cluster around:
    ``n (mu_in - mu_out) / k``."""
    return n * (mu_in - mu_out) / k


def kernel_fourier_pair(kernel: Kernel, z, d: int) -> tuple[float, float]:
    """Analytic (F_in_hat, F_out_hat) at one lattice vector, for kernels
    that have closed forms."""
    if isinstance(kernel, SbmKernel):
        return fourier_sbm(kernel.p_in, z), fourier_sbm(kernel.p_out, z)
    if isinstance(kernel, GbmKernel):
        return fourier_gbm(kernel.r_in, z, d), fourier_gbm(kernel.r_out, z, d)
    raise ValueError("custom kernels have no analytic coefficients")
