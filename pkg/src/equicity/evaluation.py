"""Aggregate quality criteria for a massing round.

Three archetypal scores: field integrals over the selected voxels, the
closeness-weighted transport efficacy between coloured spaces, and the
change-of-allocation score against the existing volumes. All displayed
scores are oriented higher-is-better and live in [0, 1].
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateDistances, ShapeMismatch
from .voxels import MassConfiguration, SensitivityFields, VoxelGrid, normalize_field


def integrate_field(
    fields: SensitivityFields | np.ndarray, mass: MassConfiguration
) -> tuple[np.ndarray, np.ndarray]:
    """Sum each sensitivity field over the selected voxels.

    Returns the raw integrals and the per-voxel normalized form (integral
    divided by the selected count) used for display.
    """
    phi = fields.values if isinstance(fields, SensitivityFields) else np.asarray(fields, dtype=float)
    if phi.ndim != 2 or phi.shape[0] != mass.selected.size:
        raise ShapeMismatch(f"fields {phi.shape} do not match {mass.selected.size} voxels")
    totals = phi[mass.selected].sum(axis=0)
    count = int(mass.selected.sum())
    normalized = totals / count if count else np.zeros_like(totals)
    return totals, normalized


def expected_colour_distances(
    volumes: np.ndarray, distances: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Expected ground distance between every colour pair.

    R = V^T D V elementwise-divided by c c^T with c the colour totals.
    Pairs involving an absent colour (c_k = 0) are set to 0 and flagged in
    the returned ``defined`` mask rather than failing.
    """
    v = np.asarray(volumes, dtype=float)
    d = np.asarray(distances, dtype=float)
    if v.ndim != 2 or d.shape != (v.shape[0], v.shape[0]):
        raise ShapeMismatch(f"volumes {v.shape} and distances {d.shape} do not conform")
    totals = v.sum(axis=0)
    pair_mass = np.outer(totals, totals)
    raw = v.T @ d @ v
    defined = pair_mass > 0
    r = np.divide(raw, pair_mass, out=np.zeros_like(raw), where=defined)
    return r, defined


def transport_efficacy(closeness: np.ndarray, r: np.ndarray) -> tuple[float, float]:
    """Relative transport cost and its complement, the efficacy.

    cost = 1^T (T . R) 1 / 1^T R 1 with T the stated closeness ratings used
    as proxy flow rates. Raises :class:`DegenerateDistances` when R sums to
    zero (all colours co-located); callers treat that as efficacy 1 by
    convention, flagged.
    """
    t = np.asarray(closeness, dtype=float)
    r = np.asarray(r, dtype=float)
    if t.shape != r.shape or t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ShapeMismatch(f"closeness {t.shape} and distances {r.shape} do not conform")
    total = float(r.sum())
    if total == 0:
        raise DegenerateDistances("colour distance matrix sums to zero")
    cost = float((t * r).sum()) / total
    return cost, 1.0 - cost


def change_cost(
    volumes: np.ndarray,
    existing: np.ndarray,
    weights: np.ndarray,
    site_capacity: np.ndarray | None = None,
) -> float:
    """Change-of-allocation score in [0, 1]; 1 means nothing is touched.

    Raw cost is the weighted L1 distance between new and existing volumes.
    It is normalized by the worst admissible cost: per cell, the larger of
    the existing volume and the cell's ceiling (the whole site capacity when
    provided, otherwise the realized volume itself).
    """
    v = np.asarray(volumes, dtype=float)
    e = np.asarray(existing, dtype=float)
    g = np.asarray(weights, dtype=float)
    if v.shape != e.shape or v.shape != g.shape:
        raise ShapeMismatch(f"volumes {v.shape}, existing {e.shape}, weights {g.shape} differ")
    if np.any(g < 0):
        raise ShapeMismatch("change weights must be nonnegative")
    raw = float((g * np.abs(v - e)).sum())
    if site_capacity is not None:
        cap = np.asarray(site_capacity, dtype=float)[:, None]
        ceiling = np.maximum(np.broadcast_to(cap, v.shape), e)
    else:
        ceiling = np.maximum(v, e)
    worst = float((g * ceiling).sum())
    if worst == 0:
        return 1.0
    return 1.0 - raw / worst


def site_distances(entry_points) -> np.ndarray:
    """Euclidean ground distances between site entry points."""
    pts = np.asarray(entry_points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ShapeMismatch(f"entry points must be (n, 2), got {pts.shape}")
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def synth_solar_field(grid: VoxelGrid, reach: int = 16) -> np.ndarray:
    """Deterministic stand-in for a solar-potential field, in [0, 1].

    The raw value grows with voxel height and shrinks with the number of
    buildable voxels inside a fixed southern cone (cells to the south at or
    above the 45-degree sun ray, one cell of lateral spread). Min-max
    normalized over the buildable voxels; a single constant field maps to
    all ones.
    """
    nx, ny, nz = grid.extents
    occupancy = np.zeros((nx, ny, nz), dtype=bool)
    ijk = grid.buildable_ijk
    occupancy[ijk[:, 0], ijk[:, 1], ijk[:, 2]] = True

    blocked = np.zeros((nx, ny, nz), dtype=float)
    depth = min(reach, ny - 1, nz - 1)
    for d in range(1, depth + 1):
        for di in (-1, 0, 1):
            # blocker at (i + di, j - d, k + d) for voxel (i, j, k)
            src_i = slice(max(di, 0), nx + min(di, 0))
            dst_i = slice(max(-di, 0), nx + min(-di, 0))
            blocked[dst_i, d:, : nz - d] += occupancy[src_i, : ny - d, d:]

    raw = ijk[:, 2].astype(float) - 0.5 * blocked[ijk[:, 0], ijk[:, 1], ijk[:, 2]]
    return normalize_field(raw)
