"""Proportional fitting of the consensus allocation to marginal targets.

The pooled allocation is rescaled alternately on rows (site capacities) and
columns (per-colour programme volumes) until the total squared marginal error
drops below tolerance, then quantized to integer voxel counts per column by
largest-remainder rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityShortfall, InfeasibleSeed, InvalidTargets, ShapeMismatch

DEFAULT_EPS = 1e-10
DEFAULT_MAX_ITER = 1000

# Relative tolerance for the sum(row targets) == sum(col targets) invariant.
TARGET_TOL = 1e-9

RECONCILE_POLICIES = ("strict", "scale-rows", "scale-cols")


@dataclass(frozen=True)
class MarginalTargets:
    """Target row sums (site capacities) and column sums (colour volumes), voxels."""

    row: np.ndarray
    col: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row", np.asarray(self.row, dtype=float))
        object.__setattr__(self, "col", np.asarray(self.col, dtype=float))
        if self.row.ndim != 1 or self.col.ndim != 1:
            raise ShapeMismatch("targets must be vectors")
        if np.any(self.row < 0) or np.any(self.col < 0):
            raise InvalidTargets("targets must be nonnegative")
        total_r, total_c = float(self.row.sum()), float(self.col.sum())
        scale = max(total_r, total_c, 1.0)
        if abs(total_r - total_c) > TARGET_TOL * scale:
            raise InvalidTargets(
                f"row targets sum to {total_r!r} but column targets sum to {total_c!r}"
            )


@dataclass
class IpfResult:
    """Fitted matrix plus its convergence report."""

    matrix: np.ndarray
    iterations: int
    error: float
    converged: bool
    error_trace: list[float] = field(default_factory=list)


def ipf_fit(
    seed: np.ndarray,
    targets: MarginalTargets,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> IpfResult:
    """Alternate row/column rescaling of ``seed`` toward the targets.

    Each iteration scales rows to the row targets, then columns to the column
    targets; the total squared error e = ||rho - r||^2 + ||kappa - c||^2 is
    recorded after every sweep. Stops when e <= eps or after ``max_iter``
    sweeps; hitting the cap is a warning state (``converged=False`` with the
    best iterate), not a failure. Zero entries are preserved exactly: updates
    are multiplicative.

    Raises :class:`InfeasibleSeed` when a zero seed row or column faces a
    positive target.
    """
    a = np.array(seed, dtype=float)
    if a.ndim != 2:
        raise ShapeMismatch(f"seed must be a matrix, got shape {a.shape}")
    if np.any(a < 0):
        raise InfeasibleSeed("seed entries must be nonnegative")
    r, c = targets.row, targets.col
    if a.shape != (r.size, c.size):
        raise ShapeMismatch(f"seed {a.shape} does not match targets ({r.size}, {c.size})")

    row_sums = a.sum(axis=1)
    col_sums = a.sum(axis=0)
    bad_row = np.flatnonzero((row_sums == 0) & (r > 0))
    if bad_row.size:
        raise InfeasibleSeed(f"seed row {int(bad_row[0])} is zero but its target is positive")
    bad_col = np.flatnonzero((col_sums == 0) & (c > 0))
    if bad_col.size:
        raise InfeasibleSeed(f"seed column {int(bad_col[0])} is zero but its target is positive")

    def sq_error(m: np.ndarray) -> float:
        rho = m.sum(axis=1)
        kappa = m.sum(axis=0)
        return float(((rho - r) ** 2).sum() + ((kappa - c) ** 2).sum())

    err = sq_error(a)
    trace = [err]
    iterations = 0
    while err > eps and iterations < max_iter:
        rho = a.sum(axis=1)
        a *= np.divide(r, rho, out=np.zeros_like(r), where=rho > 0)[:, None]
        kappa = a.sum(axis=0)
        a *= np.divide(c, kappa, out=np.zeros_like(c), where=kappa > 0)[None, :]
        err = sq_error(a)
        trace.append(err)
        iterations += 1
    return IpfResult(a, iterations, err, err <= eps, trace)


def programme_to_targets(
    programme: np.ndarray,
    scale: np.ndarray,
    voxel_volume: float,
    voxel_floor_area: float,
    capacities: np.ndarray,
    policy: str = "scale-rows",
) -> MarginalTargets:
    """Convert the district programme and site capacities to voxel targets.

    ``programme`` is required net floor area per colour (m2), ``scale`` the
    per-colour gross-volume factor (m3 of built volume per m2 of net area),
    and ``capacities`` the per-site gross floor area cap (m2, already reduced
    for height limits by the caller). Colour targets are y_k s_k / voxelVolume
    (real, not yet rounded); row targets are capacity / voxelFloorArea.

    When the totals disagree, the reconciliation policy applies: ``strict``
    raises (:class:`CapacityShortfall` when the sites cannot hold the
    programme), ``scale-rows`` rescales capacities to the programme total
    (the engine default: capacities are soft envelopes, the programme is the
    commitment), ``scale-cols`` rescales the programme.
    """
    y = np.asarray(programme, dtype=float)
    s = np.asarray(scale, dtype=float)
    cap = np.asarray(capacities, dtype=float)
    if y.ndim != 1 or s.shape != y.shape or cap.ndim != 1:
        raise ShapeMismatch("programme, scale, and capacities must be conforming vectors")
    if np.any(s <= 0) or voxel_volume <= 0 or voxel_floor_area <= 0:
        raise InvalidTargets("scale factors and voxel dimensions must be positive")
    if np.any(y < 0) or not np.any(y > 0):
        raise InvalidTargets("programme must be nonnegative with at least one positive entry")
    if np.any(cap < 0):
        raise InvalidTargets("capacities must be nonnegative")
    if policy not in RECONCILE_POLICIES:
        raise InvalidTargets(f"unknown reconciliation policy {policy!r}")

    col = y * s / voxel_volume
    row = cap / voxel_floor_area
    total_r, total_c = float(row.sum()), float(col.sum())
    if abs(total_r - total_c) > TARGET_TOL * max(total_r, total_c, 1.0):
        if policy == "strict":
            if total_r < total_c:
                raise CapacityShortfall(
                    f"sites hold {total_r:.3f} voxels, programme needs {total_c:.3f}"
                )
            raise InvalidTargets(
                f"capacity total {total_r:.3f} exceeds programme total {total_c:.3f} under strict policy"
            )
        if policy == "scale-rows":
            if total_r == 0:
                raise CapacityShortfall("total site capacity is zero")
            row = row * (total_c / total_r)
        else:
            row_total = total_r
            if total_c == 0:
                raise InvalidTargets("programme total is zero, cannot scale columns")
            col = col * (row_total / total_c)
    return MarginalTargets(row, col)


def quantize_volumes(fitted: np.ndarray) -> np.ndarray:
    """Integer voxel counts by per-column largest-remainder rounding.

    Every column is floored and the residual count (column target = the
    rounded column sum) is handed to the entries with the largest fractional
    parts, ties going to the lower site index. Column sums are exact; each
    entry moves by strictly less than one voxel.
    """
    a = np.asarray(fitted, dtype=float)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got shape {a.shape}")
    if np.any(a < 0):
        raise InfeasibleSeed("fitted matrix must be nonnegative")
    n, o = a.shape
    volumes = np.zeros((n, o), dtype=int)
    for k in range(o):
        col = a[:, k]
        target = int(np.rint(col.sum()))
        floors = np.floor(col).astype(int)
        deficit = target - int(floors.sum())
        if deficit < 0 or deficit > n:
            raise InvalidTargets(
                f"column {k} sum {col.sum()!r} is too far from an integer to quantize"
            )
        if deficit:
            fractions = col - floors
            order = np.lexsort((np.arange(n), -fractions))
            floors[order[:deficit]] += 1
        volumes[:, k] = floors
    return volumes
