"""Round orchestration: collect decisions, run the pipeline, persist records.

A round is one collect-process-report cycle. All actor decisions arrive
during COLLECTING; when the roster is complete the state flips to PROCESSING
and the pipeline runs: pooling -> proportional fitting -> quantization ->
massing -> zoning -> evaluation -> badges. The resulting RoundRecord is
immutable and replayable: re-running the pipeline on its stored inputs must
reproduce it bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import badges as badges_mod
from . import evaluation, ipf, pooling, voxels
from .config import (
    SYNTHETIC_SOLAR,
    GameConfig,
    config_from_dict,
    config_to_dict,
    normalize_decision_slice,
)
from .errors import (
    ConfigInvalid,
    CorruptState,
    DegenerateDistances,
    ShapeMismatch,
    UnknownActor,
    WrongPhase,
)

STATE_SCHEMA = "equicity-state/1"


class Phase(str, Enum):
    COLLECTING = "COLLECTING"
    PROCESSING = "PROCESSING"
    REPORTING = "REPORTING"


@dataclass
class Decision:
    actor: int
    interests: np.ndarray  # (n, o), colour columns sum to 1
    weights: np.ndarray  # (e,) nonnegative
    comment: str = ""
    submitted_at: float | None = None


@dataclass
class RoundRecord:
    t: int
    interests: np.ndarray  # (m, n, o)
    weights: np.ndarray  # (e, m)
    comments: list[str]
    submitted_at: list[float | None]
    allocation: np.ndarray  # (n, o)
    volumes: np.ndarray  # (n, o) int
    ipf_report: dict
    mean_weights: np.ndarray  # (e,)
    voxel_export: list[dict]
    scores: dict
    badges: badges_mod.RoundBadges
    duration: float

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "interests": self.interests.tolist(),
            "weights": self.weights.tolist(),
            "comments": list(self.comments),
            "submitted_at": list(self.submitted_at),
            "allocation": self.allocation.tolist(),
            "volumes": self.volumes.tolist(),
            "ipf": dict(self.ipf_report),
            "mean_weights": self.mean_weights.tolist(),
            "voxels": self.voxel_export,
            "scores": self.scores,
            "badges": self.badges.master_view(),
            "duration": self.duration,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoundRecord":
        b = data["badges"]
        badge_obj = badges_mod.RoundBadges(
            gainer=b["gainer"],
            loser=b["loser"],
            player=b["player"],
            contributor=b["contributor"],
            gain_distances=np.asarray(b["gain_distances"], dtype=float),
            pi_minus=np.asarray(
                [np.nan if v is None else v for v in b["pi_minus"]], dtype=float
            ),
            pi_plus=np.asarray(
                [np.nan if v is None else v for v in b["pi_plus"]], dtype=float
            ),
        )
        return cls(
            t=data["t"],
            interests=np.asarray(data["interests"], dtype=float),
            weights=np.asarray(data["weights"], dtype=float),
            comments=list(data["comments"]),
            submitted_at=list(data["submitted_at"]),
            allocation=np.asarray(data["allocation"], dtype=float),
            volumes=np.asarray(data["volumes"], dtype=int),
            ipf_report=dict(data["ipf"]),
            mean_weights=np.asarray(data["mean_weights"], dtype=float),
            voxel_export=list(data["voxels"]),
            scores=data["scores"],
            badges=badge_obj,
            duration=data["duration"],
        )


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def record_hash(record: RoundRecord) -> str:
    return hashlib.sha256(canonical_json(record.to_dict()).encode()).hexdigest()


class GameState:
    """One running game: config, derived environment, and round history."""

    def __init__(self, config: GameConfig, clock=time.time, field_root: str | Path = "."):
        self.config = config
        self.clock = clock
        self.t = 0
        self.phase = Phase.COLLECTING
        self.pending: dict[int, Decision] = {}
        self.history: list[RoundRecord] = []
        self._build_environment(field_root)
        self.round_opened_at = self._now()

    def _now(self) -> float:
        return self.clock() if self.clock is not None else 0.0

    def _build_environment(self, field_root: str | Path) -> None:
        cfg = self.config
        self.grid = voxels.build_grid(
            [s.polygon for s in cfg.sites],
            [s.max_height for s in cfg.sites],
            cell_size=cfg.grid.cell_size,
            bounds=cfg.grid.bounds,
            origin=cfg.grid.origin,
        )
        cell = cfg.grid.cell_size
        buildable = self.grid.site_buildable_counts()
        capacities_gfa = np.minimum(
            np.array([s.max_gfa for s in cfg.sites], dtype=float),
            buildable.astype(float) * cell * cell,
        )
        self.targets = ipf.programme_to_targets(
            cfg.programme,
            np.array([c.scale for c in cfg.colours], dtype=float),
            voxel_volume=cell**3,
            voxel_floor_area=cell**2,
            capacities=capacities_gfa,
            policy=cfg.policy,
        )

        columns = []
        for crit in cfg.criteria:
            if crit.kind == SYNTHETIC_SOLAR:
                columns.append(evaluation.synth_solar_field(self.grid))
            else:
                path = Path(field_root) / crit.path
                try:
                    payload = json.loads(Path(path).read_text())
                except (OSError, json.JSONDecodeError) as err:
                    raise ConfigInvalid(f"field file {path} unreadable: {err}") from err
                try:
                    raw = voxels.field_from_json(payload, self.grid)
                except ShapeMismatch as err:
                    raise ConfigInvalid(str(err)) from err
                columns.append(voxels.normalize_field(raw))
        self.fields = voxels.SensitivityFields(
            np.column_stack(columns), [c.name for c in cfg.criteria], self.grid.grid_hash
        )

        if cfg.distance_file:
            self.distances = np.loadtxt(Path(field_root) / cfg.distance_file)
            if self.distances.shape != (cfg.n, cfg.n):
                raise ConfigInvalid("distance file shape does not match the site count")
        else:
            self.distances = evaluation.site_distances([s.entry for s in cfg.sites])
        self.existing = np.stack([s.existing for s in cfg.sites])
        self.change_weights = np.stack([s.change_cost for s in cfg.sites])

    # -- snapshots ---------------------------------------------------------

    def state_hash(self) -> str:
        return hashlib.sha256(canonical_json(state_to_dict(self)).encode()).hexdigest()

    def pending_count(self) -> int:
        return len(self.pending)


def create_game(config: GameConfig, clock=time.time, field_root: str | Path = ".") -> GameState:
    """Validated game state at round 0, grid built and fields loaded."""
    return GameState(config, clock=clock, field_root=field_root)


def submit_decision(
    state: GameState,
    actor: int,
    interests,
    weights,
    comment: str = "",
) -> GameState:
    """Store one actor's decision; flips to PROCESSING when the roster is full.

    Resubmission before processing replaces the earlier entry (last write
    wins). Slices are normalized per colour on entry; weights must be
    nonnegative and the right length.
    """
    cfg = state.config
    if state.phase != Phase.COLLECTING:
        raise WrongPhase(Phase.COLLECTING.value, state.phase.value)
    if not 0 <= actor < cfg.m:
        raise UnknownActor(f"actor {actor} not in the roster of {cfg.m}")
    slice_ = normalize_decision_slice(np.asarray(interests, dtype=float), cfg.n, cfg.o)
    w = np.asarray(weights, dtype=float)
    if w.shape != (cfg.e,):
        raise ShapeMismatch(f"weights must be ({cfg.e},), got {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ShapeMismatch("weights must be finite and nonnegative")
    state.pending[actor] = Decision(
        actor=actor,
        interests=slice_,
        weights=w,
        comment=comment,
        submitted_at=state._now() if state.clock is not None else None,
    )
    if len(state.pending) == cfg.m:
        state.phase = Phase.PROCESSING
    return state


def run_pipeline(state: GameState, interests: np.ndarray, weights: np.ndarray) -> dict:
    """Pure round computation from the stacked decisions; no state mutation."""
    cfg = state.config
    allocation = pooling.pool_opinions(interests, cfg.control)
    fit = ipf.ipf_fit(allocation, state.targets, eps=cfg.ipf.eps, max_iter=cfg.ipf.max_iter)
    volumes = ipf.quantize_volumes(fit.matrix)
    mean_w = voxels.mean_weights(weights)
    upsilon = voxels.aggregate_value(state.fields, mean_w)
    mass = voxels.mass_select(state.grid, upsilon, volumes)
    zoning = voxels.zone_assign(mass, volumes)
    totals, normalized = evaluation.integrate_field(state.fields, mass)

    flags: list[str] = []
    r_matrix, _ = evaluation.expected_colour_distances(volumes, state.distances)
    try:
        _, efficacy = evaluation.transport_efficacy(cfg.closeness, r_matrix)
    except DegenerateDistances:
        efficacy = 1.0
        flags.append("degenerate-distances")
    change = evaluation.change_cost(
        volumes, state.existing, state.change_weights, site_capacity=state.targets.row
    )
    if not fit.converged:
        flags.append("ipf-not-converged")

    round_badges = badges_mod.issue_badges(interests, cfg.control, allocation)
    scores = {
        "fields": {
            name: {"total": float(totals[i]), "normalized": float(normalized[i])}
            for i, name in enumerate(state.fields.names)
        },
        "transport_efficacy": float(efficacy),
        "change_score": float(change),
        "flags": flags,
    }
    return {
        "allocation": allocation,
        "volumes": volumes,
        "ipf_report": {
            "iterations": fit.iterations,
            "error": float(fit.error),
            "converged": fit.converged,
        },
        "mean_weights": mean_w,
        "voxel_export": voxels.voxel_records(zoning),
        "scores": scores,
        "badges": round_badges,
    }


def advance_round(state: GameState) -> RoundRecord:
    """Execute the pipeline on the collected decisions, atomically.

    Any pipeline failure rolls the phase back to COLLECTING with the pending
    decisions intact and re-raises; on success the record is appended, the
    round counter advances, and the state moves to REPORTING.
    """
    if state.phase != Phase.PROCESSING:
        raise WrongPhase(Phase.PROCESSING.value, state.phase.value)
    cfg = state.config
    order = sorted(state.pending)
    decisions = [state.pending[i] for i in order]
    interests = np.stack([d.interests for d in decisions])
    weights = np.stack([d.weights for d in decisions], axis=1)
    try:
        outcome = run_pipeline(state, interests, weights)
    except Exception:
        state.phase = Phase.COLLECTING
        raise
    duration = max(state._now() - state.round_opened_at, 0.0) if state.clock is not None else 0.0
    record = RoundRecord(
        t=state.t,
        interests=interests,
        weights=weights,
        comments=[d.comment for d in decisions],
        submitted_at=[d.submitted_at for d in decisions],
        duration=duration,
        **outcome,
    )
    state.history.append(record)
    state.t += 1
    state.pending = {}
    state.phase = Phase.REPORTING
    return record


def acknowledge_round(state: GameState) -> GameState:
    """Open the next round for collection after the report is consumed."""
    if state.phase != Phase.REPORTING:
        raise WrongPhase(Phase.REPORTING.value, state.phase.value)
    state.phase = Phase.COLLECTING
    state.round_opened_at = state._now()
    return state


def replay_records(state: GameState) -> list[RoundRecord]:
    """Re-run the pipeline on every stored round's inputs.

    Used to verify reproducibility: the rebuilt records must serialize
    identically to the stored ones.
    """
    rebuilt = []
    for record in state.history:
        outcome = run_pipeline(state, record.interests, record.weights)
        rebuilt.append(
            RoundRecord(
                t=record.t,
                interests=record.interests,
                weights=record.weights,
                comments=record.comments,
                submitted_at=record.submitted_at,
                duration=record.duration,
                **outcome,
            )
        )
    return rebuilt


def fill_absentees(state: GameState) -> GameState:
    """Submit defaults for missing actors: their last decision, else agenda."""
    cfg = state.config
    for i in range(cfg.m):
        if i in state.pending:
            continue
        if state.history:
            last = state.history[-1]
            slice_, w = last.interests[i], last.weights[:, i]
        else:
            slice_, w = cfg.actors[i].agenda, np.full(cfg.e, 1.0 / cfg.e)
        submit_decision(state, i, slice_, w, comment="(absent: defaults applied)")
    return state


# -- scripted actors ---------------------------------------------------------


@dataclass
class ActorPolicy:
    """Headless stand-in for a human player.

    kinds: ``scripted`` replays a decision list; ``stubborn`` always submits
    the initial agenda; ``drift`` takes a convex step of rate ``rate`` from
    the previous own submission toward the previous collective decision;
    ``random`` draws positive slices from a seeded generator.
    """

    kind: str
    decisions: list | None = None
    weights: np.ndarray | None = None
    rate: float = 1.0
    seed: int = 0

    def decide(self, actor: int, state: GameState, rng) -> tuple[np.ndarray, np.ndarray]:
        cfg = state.config
        base_w = (
            np.asarray(self.weights, dtype=float)
            if self.weights is not None
            else np.full(cfg.e, 1.0 / cfg.e)
        )
        if self.kind == "scripted":
            slice_, w = self.decisions[state.t]
            return np.asarray(slice_, dtype=float), np.asarray(w, dtype=float)
        if self.kind == "stubborn":
            return cfg.actors[actor].agenda.copy(), base_w
        if self.kind == "drift":
            if not state.history:
                return cfg.actors[actor].agenda.copy(), base_w
            last = state.history[-1]
            own = last.interests[actor]
            stepped = (1.0 - self.rate) * own + self.rate * last.allocation
            return stepped, base_w
        if self.kind == "random":
            slice_ = rng.random((cfg.n, cfg.o)) + 0.05
            w = rng.random(cfg.e) + 0.05
            return slice_, w
        raise ConfigInvalid(f"unknown policy kind {self.kind!r}")


def simulate(
    config: GameConfig,
    policies: list[ActorPolicy],
    rounds: int,
    seed: int = 0,
    field_root: str | Path = ".",
) -> tuple[GameState, list[RoundRecord]]:
    """Run a headless game; deterministic for a fixed seed."""
    if len(policies) != config.m:
        raise ConfigInvalid(f"need one policy per actor ({config.m}), got {len(policies)}")
    state = create_game(config, clock=None, field_root=field_root)
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(rounds):
        for i, policy in enumerate(policies):
            slice_, w = policy.decide(i, state, rng)
            submit_decision(state, i, slice_, w)
        records.append(advance_round(state))
        acknowledge_round(state)
    return state, records


# -- persistence -------------------------------------------------------------


def state_to_dict(state: GameState) -> dict:
    return {
        "schema": STATE_SCHEMA,
        "config": config_to_dict(state.config),
        "t": state.t,
        "phase": state.phase.value,
        "pending": {
            str(actor): {
                "interests": d.interests.tolist(),
                "weights": d.weights.tolist(),
                "comment": d.comment,
                "submitted_at": d.submitted_at,
            }
            for actor, d in sorted(state.pending.items())
        },
        "history": [r.to_dict() for r in state.history],
    }


def save_state(state: GameState, path: str | Path) -> None:
    Path(path).write_text(canonical_json(state_to_dict(state)))


def state_from_dict(data: dict, clock=time.time, field_root: str | Path = ".") -> GameState:
    if not isinstance(data, dict) or data.get("schema") != STATE_SCHEMA:
        raise CorruptState(f"unknown state schema {data.get('schema')!r}")
    try:
        config = config_from_dict(data["config"])
        state = GameState(config, clock=clock, field_root=field_root)
        state.t = int(data["t"])
        state.phase = Phase(data["phase"])
        state.pending = {
            int(actor): Decision(
                actor=int(actor),
                interests=np.asarray(d["interests"], dtype=float),
                weights=np.asarray(d["weights"], dtype=float),
                comment=d["comment"],
                submitted_at=d["submitted_at"],
            )
            for actor, d in data["pending"].items()
        }
        state.history = [RoundRecord.from_dict(r) for r in data["history"]]
    except (KeyError, TypeError, ValueError, ConfigInvalid) as err:
        raise CorruptState(f"state file invalid: {err}") from err
    return state


def load_state(path: str | Path, clock=time.time, field_root: str | Path = ".") -> GameState:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise CorruptState(f"cannot read state file: {err}") from err
    return state_from_dict(data, clock=clock, field_root=field_root)


# -- external dataset adapter -------------------------------------------------

DECISION_CSV_HEADER = ["round", "actor", "site", "colour", "value"]


def decisions_to_long_csv(tensor: np.ndarray) -> str:
    """Serialize a (rounds, m, n, o) decision tensor to long-format CSV."""
    x = np.asarray(tensor, dtype=float)
    if x.ndim != 4:
        raise ShapeMismatch(f"decision tensor must be 4-D, got {x.shape}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DECISION_CSV_HEADER)
    tau, m, n, o = x.shape
    for t in range(tau):
        for i in range(m):
            for j in range(n):
                for k in range(o):
                    writer.writerow([t, i, j, k, repr(float(x[t, i, j, k]))])
    return buf.getvalue()


def decisions_from_long_csv(text: str) -> np.ndarray:
    """Parse long-format decision rows back into a (rounds, m, n, o) tensor."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != DECISION_CSV_HEADER:
        raise CorruptState(f"decision CSV must start with header {DECISION_CSV_HEADER}")
    rows = [(int(r[0]), int(r[1]), int(r[2]), int(r[3]), float(r[4])) for r in reader if r]
    if not rows:
        raise CorruptState("decision CSV has no data rows")
    tau = max(r[0] for r in rows) + 1
    m = max(r[1] for r in rows) + 1
    n = max(r[2] for r in rows) + 1
    o = max(r[3] for r in rows) + 1
    tensor = np.full((tau, m, n, o), np.nan)
    for t, i, j, k, v in rows:
        tensor[t, i, j, k] = v
    if np.any(np.isnan(tensor)):
        raise CorruptState("decision CSV is missing (round, actor, site, colour) cells")
    return tensor


def history_decision_tensor(state: GameState) -> np.ndarray:
    """Stack stored round interests into the (rounds, m, n, o) panel tensor."""
    if not state.history:
        return np.zeros((0, state.config.m, state.config.n, state.config.o))
    return np.stack([r.interests for r in state.history])


# -- views for the service layer ----------------------------------------------


def gain_scores(record: RoundRecord, o: int) -> list[float]:
    # Frobenius distance between column-stochastic slices is at most sqrt(2 o).
    bound = float(np.sqrt(2.0 * o))
    return [1.0 - float(d) / bound for d in record.badges.gain_distances]


def public_snapshot(state: GameState) -> dict:
    cfg = state.config
    return {
        "name": cfg.name,
        "phase": state.phase.value,
        "round": state.t,
        "actor_count": cfg.m,
        "pending_count": state.pending_count(),
        "actors": [{"name": a.name, "role": a.role} for a in cfg.actors],
        "sites": [s.name for s in cfg.sites],
        "colours": [c.name for c in cfg.colours],
        "criteria": [c.name for c in cfg.criteria],
        "score_history": [r.scores for r in state.history],
        "gain_history": [gain_scores(r, cfg.o) for r in state.history],
        "badge_history": [r.badges.public_view() for r in state.history],
        "voxel_ref": f"rounds/{state.t - 1}" if state.history else None,
    }


def actor_view(state: GameState, actor: int) -> dict:
    cfg = state.config
    if not 0 <= actor < cfg.m:
        raise UnknownActor(f"actor {actor} not in the roster")
    agenda = cfg.actors[actor].agenda
    control_slice = cfg.control[:, actor, :]
    surplus = control_slice - agenda
    return {
        "actor": actor,
        "name": cfg.actors[actor].name,
        "role": cfg.actors[actor].role,
        "agenda": agenda.tolist(),
        "control": control_slice.tolist(),
        "power_surplus": surplus.tolist(),
        "gains": [gain_scores(r, cfg.o)[actor] for r in state.history],
        "has_submitted": actor in state.pending,
    }


def record_view(record: RoundRecord, o: int, master: bool = False) -> dict:
    view = {
        "t": record.t,
        "allocation": record.allocation.tolist(),
        "volumes": record.volumes.tolist(),
        "ipf": record.ipf_report,
        "mean_weights": record.mean_weights.tolist(),
        "scores": record.scores,
        "gains": gain_scores(record, o),
        "badges": record.badges.master_view() if master else record.badges.public_view(),
        "comments": record.comments,
        "voxels": record.voxel_export,
        "duration": record.duration,
    }
    return view
