"""A ready-to-play demo district: five roles, seven sites, five colours.

Used by the example scripts and the test suite. Field files for the two
non-synthetic criteria are generated under ``field_root/fields`` so a demo
game can be created, served, or simulated immediately.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import voxels
from .config import (
    ActorSpec,
    ColourSpec,
    CriterionSpec,
    GameConfig,
    GridSpec,
    IpfSpec,
    SiteSpec,
    validate_config,
)

ROLES = ["Mayor", "Neighbour", "Architect", "Inhabitant", "Developer"]
SITE_NAMES = [
    "Skin",
    "North Wing",
    "Central Area",
    "South Wing",
    "Southern Yard",
    "Central Yard",
    "Kruithuis Yard",
]
COLOUR_NAMES = ["Residential", "Commercial", "Cultural", "Public", "Empty"]


def rect(x0: float, y0: float, w: float, h: float) -> list[tuple[float, float]]:
    return [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)]


def make_demo_config(field_root: Path, big_grid: bool = False, seed: int = 7) -> GameConfig:
    """Five-actor, seven-site, five-colour game with on-disk field files.

    ``big_grid`` switches to a ~100k-cell lattice for throughput checks;
    the default stays small enough for interactive play and fast tests.
    """
    field_root = Path(field_root)
    rng = np.random.default_rng(seed)
    m, n, o = len(ROLES), len(SITE_NAMES), len(COLOUR_NAMES)
    if big_grid:
        cell, sw, sh, height = 3.0, 57.0, 57.0, 99.0
    else:
        cell, sw, sh, height = 6.0, 24.0, 18.0, 18.0
    sites = []
    for j, name in enumerate(SITE_NAMES):
        x0 = (j % 4) * (sw + cell)
        y0 = (j // 4) * (sh + cell)
        sites.append(
            SiteSpec(
                name=name,
                polygon=rect(x0, y0, sw, sh),
                entry=(x0 + sw / 2, y0 + sh / 2),
                max_height=height,
                max_gfa=sw * sh * (height / cell) * 0.9,
                existing=np.array(rng.integers(0, 4, size=o), dtype=float),
                change_cost=rng.random(o) + 0.2,
            )
        )
    cells_per_site = (sw / cell) * (sh / cell) * (height / cell)
    # programme sized to roughly 40% of the district's voxel capacity
    scale = np.array([3.0, 3.6, 4.2, 3.3, 3.0])
    share = rng.random(o) + 0.5
    share /= share.sum()
    programme = share * (0.4 * n * cells_per_site * cell**3) / scale

    closeness = rng.random((o, o))
    closeness = (closeness + closeness.T) / 2

    actors = [
        ActorSpec(name=f"player-{i}", role=role, agenda=rng.random((n, o)) + 0.1)
        for i, role in enumerate(ROLES)
    ]

    grid = voxels.build_grid(
        [s.polygon for s in sites], [s.max_height for s in sites], cell_size=cell
    )
    field_dir = field_root / "fields"
    field_dir.mkdir(parents=True, exist_ok=True)
    criteria = [CriterionSpec(name="solar", kind="synthetic-solar")]
    for name in ("daylight", "quiet"):
        raw = np.random.default_rng(abs(hash(name)) % 2**31).random(grid.buildable_count)
        path = field_dir / f"{name}.json"
        path.write_text(json.dumps(voxels.field_to_json(grid.grid_hash, name, raw)))
        criteria.append(
            CriterionSpec(name=name, kind="file", path=str(path.relative_to(field_root)))
        )

    cfg = GameConfig(
        name="demo-district",
        actors=actors,
        sites=sites,
        colours=[ColourSpec(name, s) for name, s in zip(COLOUR_NAMES, scale)],
        programme=programme,
        control=rng.random((n, m, o)) + 0.1,
        closeness=closeness,
        criteria=criteria,
        grid=GridSpec(cell_size=cell),
        ipf=IpfSpec(),
        policy="scale-rows",
    )
    return validate_config(cfg)
