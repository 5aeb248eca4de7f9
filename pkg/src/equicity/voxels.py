"""Morton-indexed voxel grid, sensitivity fields, mass selection, and zoning.

The district volume is discretised into a regular grid of cubic cells, each
addressed by a 64-bit Morton code (21 bits per axis, x in the lowest bit
position). Cells are stored as flat arrays in Morton-rank order; per-criterion
quality fields are defined over the buildable subset only.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllZeroWeights,
    CoordOverflow,
    CountMismatch,
    EmptySite,
    NonFinite,
    ShapeMismatch,
    SiteOverflow,
)

NO_SITE = -1
EMPTY_COLOUR = -1

_COORD_BITS = 21
_COORD_MAX = 1 << _COORD_BITS  # exclusive


def _spread(v: np.ndarray) -> np.ndarray:
    # Insert two zero bits between each of the 21 low bits.
    v = v.astype(np.uint64)
    v &= np.uint64(0x1FFFFF)
    v = (v | (v << np.uint64(32))) & np.uint64(0x1F00000000FFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x1F0000FF0000FF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x100F00F00F00F00F)
    v = (v | (v << np.uint64(4))) & np.uint64(0x10C30C30C30C30C3)
    v = (v | (v << np.uint64(2))) & np.uint64(0x1249249249249249)
    return v


def _compact(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64)
    v &= np.uint64(0x1249249249249249)
    v = (v | (v >> np.uint64(2))) & np.uint64(0x10C30C30C30C30C3)
    v = (v | (v >> np.uint64(4))) & np.uint64(0x100F00F00F00F00F)
    v = (v | (v >> np.uint64(8))) & np.uint64(0x1F0000FF0000FF)
    v = (v | (v >> np.uint64(16))) & np.uint64(0x1F00000000FFFF)
    v = (v | (v >> np.uint64(32))) & np.uint64(0x1FFFFF)
    return v


def morton_encode(i: int, j: int, k: int) -> int:
    """Interleave grid coordinates into a Morton code, x bits lowest."""
    for c in (i, j, k):
        if not 0 <= c < _COORD_MAX:
            raise CoordOverflow(f"coordinate {c} outside [0, 2^21)")
    code = morton_encode_array(np.array([[i, j, k]], dtype=np.uint64))
    return int(code[0])


def morton_decode(code: int) -> tuple[int, int, int]:
    """Invert :func:`morton_encode` exactly."""
    if not 0 <= code < (1 << 63):
        raise CoordOverflow(f"code {code} outside 63-bit range")
    ijk = morton_decode_array(np.array([code], dtype=np.uint64))
    return int(ijk[0, 0]), int(ijk[0, 1]), int(ijk[0, 2])


def morton_encode_array(ijk: np.ndarray) -> np.ndarray:
    """Vectorized encode of an (N, 3) integer coordinate array."""
    ijk = np.asarray(ijk)
    if ijk.ndim != 2 or ijk.shape[1] != 3:
        raise ShapeMismatch(f"expected (N, 3) coordinates, got {ijk.shape}")
    if np.any(ijk < 0) or np.any(ijk >= _COORD_MAX):
        raise CoordOverflow("coordinates outside [0, 2^21)")
    x = _spread(ijk[:, 0].astype(np.uint64))
    y = _spread(ijk[:, 1].astype(np.uint64))
    z = _spread(ijk[:, 2].astype(np.uint64))
    return x | (y << np.uint64(1)) | (z << np.uint64(2))


def morton_decode_array(codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.uint64)
    out = np.empty((codes.size, 3), dtype=np.int64)
    out[:, 0] = _compact(codes).astype(np.int64)
    out[:, 1] = _compact(codes >> np.uint64(1)).astype(np.int64)
    out[:, 2] = _compact(codes >> np.uint64(2)).astype(np.int64)
    return out


def points_in_polygon(px: np.ndarray, py: np.ndarray, polygon) -> np.ndarray:
    """Even-odd point-in-polygon test, boundary points counted inside."""
    poly = np.asarray(polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 3:
        raise ShapeMismatch(f"polygon must be (V, 2) with V >= 3, got {poly.shape}")
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    boundary = np.zeros(px.shape, dtype=bool)
    nv = poly.shape[0]
    for v in range(nv):
        x1, y1 = poly[v]
        x2, y2 = poly[(v + 1) % nv]
        crosses = (y1 > py) != (y2 > py)
        if np.any(crosses):
            x_int = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (px < x_int)
        # Boundary: collinear within a length-scaled epsilon and inside the segment's span.
        ex, ey = x2 - x1, y2 - y1
        seg_sq = ex * ex + ey * ey
        if seg_sq == 0:
            continue
        cross = ex * (py - y1) - ey * (px - x1)
        t = (ex * (px - x1) + ey * (py - y1)) / seg_sq
        boundary |= (np.abs(cross) <= 1e-9 * np.sqrt(seg_sq)) & (t >= 0.0) & (t <= 1.0)
    return inside | boundary


@dataclass
class VoxelGrid:
    """Regular grid over the district, cells in Morton-rank order.

    ``site_id`` is the owning site per cell (NO_SITE outside all footprints);
    ``buildable`` marks cells inside a footprint and below the site's height
    cap. Field vectors and mass/zone states are indexed over the buildable
    subset, in the same Morton-rank order.
    """

    origin: tuple[float, float, float]
    cell_size: float
    extents: tuple[int, int, int]
    morton: np.ndarray
    ijk: np.ndarray
    site_id: np.ndarray
    buildable: np.ndarray
    site_count: int
    grid_hash: str
    buildable_index: np.ndarray = field(init=False)

    def __post_init__(self):
        self.buildable_index = np.flatnonzero(self.buildable)

    @property
    def cell_count(self) -> int:
        return int(self.morton.size)

    @property
    def buildable_count(self) -> int:
        return int(self.buildable_index.size)

    @property
    def buildable_morton(self) -> np.ndarray:
        return self.morton[self.buildable_index]

    @property
    def buildable_ijk(self) -> np.ndarray:
        return self.ijk[self.buildable_index]

    @property
    def buildable_site(self) -> np.ndarray:
        return self.site_id[self.buildable_index]

    def buildable_centers(self) -> np.ndarray:
        return (self.buildable_ijk + 0.5) * self.cell_size + np.asarray(self.origin)

    def site_buildable_counts(self) -> np.ndarray:
        counts = np.zeros(self.site_count, dtype=int)
        sites = self.buildable_site
        np.add.at(counts, sites, 1)
        return counts


def grid_fingerprint(origin, cell_size, extents, polygons, max_heights) -> str:
    """Stable hash of everything that determines the buildable lattice."""
    payload = {
        "origin": [float(v) for v in origin],
        "cell_size": float(cell_size),
        "extents": [int(v) for v in extents],
        "sites": [
            {
                "polygon": [[float(x), float(y)] for x, y in poly],
                "max_height": float(h),
            }
            for poly, h in zip(polygons, max_heights)
        ],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_grid(
    polygons,
    max_heights,
    cell_size: float,
    bounds=None,
    origin=None,
) -> VoxelGrid:
    """Rasterize site footprints into a Morton-ordered voxel grid.

    A cell belongs to the lowest-index site whose footprint contains its
    center (boundary counts as inside); it is buildable when its center is
    also below that site's height cap. Raises :class:`EmptySite` when a site
    ends up with no buildable voxels.
    """
    if cell_size <= 0:
        raise ShapeMismatch("cell_size must be positive")
    polys = [np.asarray(p, dtype=float) for p in polygons]
    heights = np.asarray(max_heights, dtype=float)
    if len(polys) != heights.size or not polys:
        raise ShapeMismatch("need one max height per site polygon")

    if bounds is None:
        all_xy = np.concatenate(polys)
        lo = np.array([all_xy[:, 0].min(), all_xy[:, 1].min(), 0.0])
        hi = np.array([all_xy[:, 0].max(), all_xy[:, 1].max(), float(heights.max())])
    else:
        lo = np.asarray(bounds[0], dtype=float)
        hi = np.asarray(bounds[1], dtype=float)
    if origin is not None:
        lo = np.asarray(origin, dtype=float)
    extents = np.maximum(np.ceil((hi - lo) / cell_size - 1e-9).astype(int), 1)
    nx, ny, nz = int(extents[0]), int(extents[1]), int(extents[2])
    if max(nx, ny, nz) >= _COORD_MAX:
        raise CoordOverflow(f"extents {extents} exceed the 21-bit coordinate range")

    ii, jj, kk = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    ijk = np.column_stack([ii.ravel(), jj.ravel(), kk.ravel()])
    codes = morton_encode_array(ijk)
    order = np.argsort(codes, kind="stable")
    codes = codes[order]
    ijk = ijk[order]

    centers = (ijk + 0.5) * cell_size + lo
    site_id = np.full(codes.size, NO_SITE, dtype=int)
    unassigned = np.ones(codes.size, dtype=bool)
    for s, poly in enumerate(polys):
        hit = unassigned & points_in_polygon(centers[:, 0], centers[:, 1], poly)
        site_id[hit] = s
        unassigned &= ~hit

    buildable = np.zeros(codes.size, dtype=bool)
    assigned = site_id != NO_SITE
    buildable[assigned] = centers[assigned, 2] < heights[site_id[assigned]]

    for s in range(len(polys)):
        if not np.any(buildable & (site_id == s)):
            raise EmptySite(s)

    fingerprint = grid_fingerprint(tuple(lo), cell_size, (nx, ny, nz), polys, heights)
    return VoxelGrid(
        origin=(float(lo[0]), float(lo[1]), float(lo[2])),
        cell_size=float(cell_size),
        extents=(nx, ny, nz),
        morton=codes,
        ijk=ijk,
        site_id=site_id,
        buildable=buildable,
        site_count=len(polys),
        grid_hash=fingerprint,
    )


@dataclass
class SensitivityFields:
    """Per-criterion quality fields over the buildable voxels, values in [0, 1]."""

    values: np.ndarray  # (buildable_count, criteria)
    names: list[str]
    grid_hash: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise ShapeMismatch(
                f"field matrix {self.values.shape} does not match {len(self.names)} criteria"
            )


def normalize_field(raw: np.ndarray) -> np.ndarray:
    """Min-max normalize a raw field over the buildable voxels.

    A constant field maps to all ones: a criterion with no spatial signal
    must not veto the T-norm aggregation.
    """
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise NonFinite("field contains NaN or Inf")
    lo, hi = float(raw.min()), float(raw.max())
    if hi == lo:
        return np.ones_like(raw)
    return (raw - lo) / (hi - lo)


def field_to_json(grid_hash: str, name: str, values: np.ndarray) -> dict:
    return {
        "gridHash": grid_hash,
        "criterionName": name,
        "values": [float(v) for v in np.asarray(values, dtype=float)],
    }


def field_from_json(payload: dict, grid: VoxelGrid) -> np.ndarray:
    if payload.get("gridHash") != grid.grid_hash:
        raise ShapeMismatch(
            f"field gridHash {payload.get('gridHash')!r} does not match grid {grid.grid_hash!r}"
        )
    values = np.asarray(payload["values"], dtype=float)
    if values.size != grid.buildable_count:
        raise ShapeMismatch(
            f"field has {values.size} values, grid has {grid.buildable_count} buildable voxels"
        )
    return values


def mean_weights(submitted: np.ndarray) -> np.ndarray:
    """Average the per-actor criterion weights and renormalize to sum 1.

    ``submitted`` is (criteria, actors). Weights act as exponents in the
    T-norm, so only their ratios matter; the normalization keeps the
    aggregate a weighted geometric mean.
    """
    w = np.asarray(submitted, dtype=float)
    if w.ndim != 2:
        raise ShapeMismatch(f"weights must be (criteria, actors), got {w.shape}")
    if np.any(w < 0):
        raise ShapeMismatch("weights must be nonnegative")
    mean = w.mean(axis=1)
    total = mean.sum()
    if total == 0:
        raise AllZeroWeights("every submitted weight is zero")
    return mean / total


def aggregate_value(fields: SensitivityFields | np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted-product (T-norm) aggregation of the quality fields.

    upsilon_l = prod_i phi[l, i] ** w_i, with 0**0 = 1 so a zero-weight
    criterion exerts no influence even where its field vanishes.
    """
    phi = fields.values if isinstance(fields, SensitivityFields) else np.asarray(fields, dtype=float)
    w = np.asarray(weights, dtype=float)
    if phi.ndim != 2 or w.shape != (phi.shape[1],):
        raise ShapeMismatch(f"fields {phi.shape} and weights {w.shape} do not conform")
    return np.prod(phi ** w[None, :], axis=1)


@dataclass
class MassConfiguration:
    """Binary selected/empty state per buildable voxel."""

    grid: VoxelGrid
    selected: np.ndarray  # bool over buildable voxels

    def __post_init__(self):
        self.selected = np.asarray(self.selected, dtype=bool)
        if self.selected.shape != (self.grid.buildable_count,):
            raise ShapeMismatch("mass vector does not match the buildable voxel count")

    def site_counts(self) -> np.ndarray:
        counts = np.zeros(self.grid.site_count, dtype=int)
        np.add.at(counts, self.grid.buildable_site[self.selected], 1)
        return counts


@dataclass
class ZoningConfiguration:
    """Per-voxel colour index over buildable voxels; EMPTY_COLOUR where unselected."""

    grid: VoxelGrid
    colour: np.ndarray  # int over buildable voxels

    def __post_init__(self):
        self.colour = np.asarray(self.colour, dtype=int)
        if self.colour.shape != (self.grid.buildable_count,):
            raise ShapeMismatch("zoning vector does not match the buildable voxel count")

    def site_colour_counts(self, colours: int) -> np.ndarray:
        counts = np.zeros((self.grid.site_count, colours), dtype=int)
        chosen = self.colour != EMPTY_COLOUR
        np.add.at(counts, (self.grid.buildable_site[chosen], self.colour[chosen]), 1)
        return counts


def mass_select(grid: VoxelGrid, upsilon: np.ndarray, volumes: np.ndarray) -> MassConfiguration:
    """Pick the top-valued voxels per site, counts given by the volume rows.

    Site j receives its sum of coloured voxel counts; ties on the aggregated
    value break toward the lower Morton code so selection is deterministic.
    """
    upsilon = np.asarray(upsilon, dtype=float)
    volumes = np.asarray(volumes)
    if upsilon.shape != (grid.buildable_count,):
        raise ShapeMismatch("value vector does not match the buildable voxel count")
    if volumes.ndim != 2 or volumes.shape[0] != grid.site_count:
        raise ShapeMismatch(f"volume matrix {volumes.shape} does not match {grid.site_count} sites")
    selected = np.zeros(grid.buildable_count, dtype=bool)
    sites = grid.buildable_site
    mortons = grid.buildable_morton
    needed = volumes.sum(axis=1).astype(int)
    for j in range(grid.site_count):
        members = np.flatnonzero(sites == j)
        n_j = int(needed[j])
        if n_j > members.size:
            raise SiteOverflow(j, n_j, int(members.size))
        if n_j == 0:
            continue
        order = np.lexsort((mortons[members], -upsilon[members]))
        selected[members[order[:n_j]]] = True
    return MassConfiguration(grid, selected)


def zone_assign(mass: MassConfiguration, volumes: np.ndarray) -> ZoningConfiguration:
    """Colour the selected voxels per site in contiguous height-ordered blocks.

    Within each site the selected voxels are sorted by (z ascending, Morton
    ascending) and painted in fixed colour-index order with block sizes from
    the volume row. Illustrative only: aggregate field scores ignore colours.
    """
    grid = mass.grid
    volumes = np.asarray(volumes, dtype=int)
    if volumes.ndim != 2 or volumes.shape[0] != grid.site_count:
        raise ShapeMismatch(f"volume matrix {volumes.shape} does not match {grid.site_count} sites")
    counts = mass.site_counts()
    targets = volumes.sum(axis=1)
    if not np.array_equal(counts, targets):
        raise CountMismatch(f"selected counts {counts.tolist()} != volume rows {targets.tolist()}")
    colour = np.full(grid.buildable_count, EMPTY_COLOUR, dtype=int)
    sites = grid.buildable_site
    mortons = grid.buildable_morton
    zs = grid.buildable_ijk[:, 2]
    for j in range(grid.site_count):
        members = np.flatnonzero((sites == j) & mass.selected)
        if members.size == 0:
            continue
        order = members[np.lexsort((mortons[members], zs[members]))]
        offset = 0
        for k in range(volumes.shape[1]):
            block = int(volumes[j, k])
            colour[order[offset : offset + block]] = k
            offset += block
    return ZoningConfiguration(grid, colour)


def voxel_records(zoning: ZoningConfiguration) -> list[dict]:
    """Selected-voxel export for the UI: one record per built voxel."""
    grid = zoning.grid
    chosen = np.flatnonzero(zoning.colour != EMPTY_COLOUR)
    mortons = grid.buildable_morton
    sites = grid.buildable_site
    return [
        {"morton": int(mortons[i]), "site": int(sites[i]), "colour": int(zoning.colour[i])}
        for i in chosen
    ]
