"""Game configuration: actors, sites, colours, programme, and advanced settings.

A config is the complete static description of one game instance. Everything
a round needs that players do not submit lives here: the control tensor, the
district programme, closeness ratings, change costs, grid parameters, and
the criteria registry. Loaded configs are validated and normalized once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid, ZeroRow
from .ipf import RECONCILE_POLICIES
from .linalg import normalize_rows

SYNTHETIC_SOLAR = "synthetic-solar"


@dataclass
class ActorSpec:
    name: str
    role: str
    agenda: np.ndarray  # (n, o), each colour column sums to 1 after load


@dataclass
class SiteSpec:
    name: str
    polygon: list[tuple[float, float]]
    entry: tuple[float, float]
    max_height: float
    max_gfa: float
    existing: np.ndarray  # (o,) voxel counts already built
    change_cost: np.ndarray  # (o,) cost-of-change weights


@dataclass
class ColourSpec:
    name: str
    scale: float  # gross built volume (m3) per m2 of net lettable area


@dataclass
class CriterionSpec:
    name: str
    kind: str  # "file" or SYNTHETIC_SOLAR
    path: str | None = None
    description: str = ""


@dataclass
class GridSpec:
    cell_size: float
    origin: tuple[float, float, float] | None = None
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]] | None = None


@dataclass
class IpfSpec:
    eps: float = 1e-10
    max_iter: int = 1000


@dataclass
class GameConfig:
    name: str
    actors: list[ActorSpec]
    sites: list[SiteSpec]
    colours: list[ColourSpec]
    programme: np.ndarray  # (o,) required net floor area per colour, m2
    control: np.ndarray  # (n, m, o), pages row-stochastic after load
    closeness: np.ndarray  # (o, o) symmetric ratings in [0, 1]
    criteria: list[CriterionSpec]
    grid: GridSpec
    ipf: IpfSpec = field(default_factory=IpfSpec)
    policy: str = "scale-rows"
    distance_file: str | None = None

    @property
    def m(self) -> int:
        return len(self.actors)

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def o(self) -> int:
        return len(self.colours)

    @property
    def e(self) -> int:
        return len(self.criteria)


def normalize_decision_slice(values: np.ndarray, n: int, o: int) -> np.ndarray:
    """Normalize an (n, o) interest slice so each colour column sums to 1."""
    slice_ = np.asarray(values, dtype=float)
    if slice_.shape != (n, o):
        raise ConfigInvalid(f"interest slice must be ({n}, {o}), got {slice_.shape}")
    try:
        return normalize_rows(slice_.T).T
    except ZeroRow as err:
        raise ZeroRow(err.row, "colour column sums to zero", colour=err.row) from err


def validate_config(cfg: GameConfig) -> GameConfig:
    """Check structural invariants and normalize stochastic inputs in place."""
    m, n, o, e = cfg.m, cfg.n, cfg.o, cfg.e
    if min(m, n, o) < 1:
        raise ConfigInvalid("need at least one actor, site, and colour")
    if e < 1:
        raise ConfigInvalid("need at least one massing criterion")
    if cfg.policy not in RECONCILE_POLICIES:
        raise ConfigInvalid(f"unknown reconciliation policy {cfg.policy!r}")
    if cfg.grid.cell_size <= 0:
        raise ConfigInvalid("grid cell_size must be positive")

    cfg.programme = np.asarray(cfg.programme, dtype=float)
    if cfg.programme.shape != (o,) or np.any(cfg.programme < 0) or not np.any(cfg.programme > 0):
        raise ConfigInvalid("programme must be a nonnegative (o,) vector with some demand")

    cfg.closeness = np.asarray(cfg.closeness, dtype=float)
    if cfg.closeness.shape != (o, o):
        raise ConfigInvalid(f"closeness must be ({o}, {o})")
    if np.any(cfg.closeness < 0) or np.any(cfg.closeness > 1):
        raise ConfigInvalid("closeness ratings must lie in [0, 1]")
    if np.max(np.abs(cfg.closeness - cfg.closeness.T)) > 1e-12:
        raise ConfigInvalid("closeness ratings must be symmetric (closeness is mutual)")

    cfg.control = np.asarray(cfg.control, dtype=float)
    if cfg.control.shape != (n, m, o):
        raise ConfigInvalid(f"control tensor must be ({n}, {m}, {o}), got {cfg.control.shape}")
    if np.any(cfg.control < 0):
        raise ConfigInvalid("control entries must be nonnegative")
    control = cfg.control.copy()
    for k in range(o):
        try:
            control[:, :, k] = normalize_rows(control[:, :, k])
        except ZeroRow as err:
            raise ConfigInvalid(f"site {err.row} has no controller for colour {k}") from err
    cfg.control = control

    for a in cfg.actors:
        a.agenda = normalize_decision_slice(a.agenda, n, o)

    for s in cfg.sites:
        if len(s.polygon) < 3:
            raise ConfigInvalid(f"site {s.name!r} footprint needs at least 3 vertices")
        if s.max_height <= 0 or s.max_gfa <= 0:
            raise ConfigInvalid(f"site {s.name!r} needs positive max_height and max_gfa")
        s.existing = np.asarray(s.existing, dtype=float)
        s.change_cost = np.asarray(s.change_cost, dtype=float)
        if s.existing.shape != (o,) or s.change_cost.shape != (o,):
            raise ConfigInvalid(f"site {s.name!r} existing/change_cost must be (o,) vectors")
        if np.any(s.existing < 0) or np.any(s.change_cost < 0):
            raise ConfigInvalid(f"site {s.name!r} existing/change_cost must be nonnegative")

    for crit in cfg.criteria:
        if crit.kind not in ("file", SYNTHETIC_SOLAR):
            raise ConfigInvalid(f"criterion {crit.name!r} has unknown kind {crit.kind!r}")
        if crit.kind == "file" and not crit.path:
            raise ConfigInvalid(f"criterion {crit.name!r} needs a field file path")
    return cfg


def config_to_dict(cfg: GameConfig) -> dict:
    return {
        "name": cfg.name,
        "actors": [
            {"name": a.name, "role": a.role, "agenda": a.agenda.tolist()} for a in cfg.actors
        ],
        "sites": [
            {
                "name": s.name,
                "polygon": [[float(x), float(y)] for x, y in s.polygon],
                "entry": [float(s.entry[0]), float(s.entry[1])],
                "max_height": float(s.max_height),
                "max_gfa": float(s.max_gfa),
                "existing": s.existing.tolist(),
                "change_cost": s.change_cost.tolist(),
            }
            for s in cfg.sites
        ],
        "colours": [{"name": c.name, "scale": float(c.scale)} for c in cfg.colours],
        "programme": cfg.programme.tolist(),
        "control": cfg.control.tolist(),
        "closeness": cfg.closeness.tolist(),
        "criteria": [
            {"name": c.name, "kind": c.kind, "path": c.path, "description": c.description}
            for c in cfg.criteria
        ],
        "grid": {
            "cell_size": cfg.grid.cell_size,
            "origin": list(cfg.grid.origin) if cfg.grid.origin else None,
            "bounds": [list(cfg.grid.bounds[0]), list(cfg.grid.bounds[1])]
            if cfg.grid.bounds
            else None,
        },
        "ipf": {"eps": cfg.ipf.eps, "max_iter": cfg.ipf.max_iter},
        "policy": cfg.policy,
        "distance_file": cfg.distance_file,
    }


def config_from_dict(data: dict) -> GameConfig:
    try:
        grid = data["grid"]
        cfg = GameConfig(
            name=data.get("name", "game"),
            actors=[
                ActorSpec(a["name"], a.get("role", ""), np.asarray(a["agenda"], dtype=float))
                for a in data["actors"]
            ],
            sites=[
                SiteSpec(
                    s["name"],
                    [tuple(p) for p in s["polygon"]],
                    tuple(s["entry"]),
                    float(s["max_height"]),
                    float(s["max_gfa"]),
                    np.asarray(s["existing"], dtype=float),
                    np.asarray(s["change_cost"], dtype=float),
                )
                for s in data["sites"]
            ],
            colours=[ColourSpec(c["name"], float(c["scale"])) for c in data["colours"]],
            programme=np.asarray(data["programme"], dtype=float),
            control=np.asarray(data["control"], dtype=float),
            closeness=np.asarray(data["closeness"], dtype=float),
            criteria=[
                CriterionSpec(
                    c["name"], c["kind"], c.get("path"), c.get("description", "")
                )
                for c in data["criteria"]
            ],
            grid=GridSpec(
                cell_size=float(grid["cell_size"]),
                origin=tuple(grid["origin"]) if grid.get("origin") else None,
                bounds=(tuple(grid["bounds"][0]), tuple(grid["bounds"][1]))
                if grid.get("bounds")
                else None,
            ),
            ipf=IpfSpec(
                eps=float(data.get("ipf", {}).get("eps", 1e-10)),
                max_iter=int(data.get("ipf", {}).get("max_iter", 1000)),
            ),
            policy=data.get("policy", "scale-rows"),
            distance_file=data.get("distance_file"),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigInvalid(f"malformed config: {err}") from err
    return validate_config(cfg)


def load_config(path: str | Path) -> GameConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(cfg: GameConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
